// Forward pass of the unrolled decoder, recording what the reverse pass needs.
//
// In recording mode every iteration keeps its own buffers. In plain decode
// mode two slots are reused in turn, since each iteration only reads the
// previous one.

use alloc::vec::Vec;

use super::{DecoderModel, NO_EDGE};
use crate::math;

pub(crate) const VN_CLAMPED: u8 = 1;
pub(crate) const ARG_SATURATED: u8 = 2;
pub(crate) const CN_CLAMPED: u8 = 4;

/// Forward record of one decoded frame.
///
/// A tape is sized for one model; reusing it across frames of the same model
/// avoids reallocation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    pub(crate) recorded: bool,
    pub(crate) iterations: usize,
    pub(crate) n: usize,
    pub(crate) edge_off: Vec<usize>,
    pub(crate) vn_msg: Vec<f64>,
    pub(crate) tanh_half: Vec<f64>,
    pub(crate) cn_arg: Vec<f64>,
    pub(crate) cn_raw: Vec<f64>,
    pub(crate) cn_out: Vec<f64>,
    pub(crate) edge_flags: Vec<u8>,
    pub(crate) sums: Vec<f64>,
    pub(crate) outputs: Vec<f64>,
    pub(crate) out_clamped: Vec<bool>,
    pub(crate) channel: Vec<f64>,
}

impl Tape {
    /// Tape able to replay adjoints for `model`.
    pub fn recording(model: &DecoderModel) -> Self {
        let mut t = Tape::default();
        t.prepare(model, true);
        t
    }

    pub(crate) fn prepare(&mut self, model: &DecoderModel, record: bool) {
        let l = model.iterations();
        let n = model.n();
        let slots = if record { l } else { 2 };
        let mut edge_off = Vec::with_capacity(slots + 1);
        edge_off.push(0);
        if record {
            for it in &model.schedule {
                edge_off.push(edge_off.last().unwrap() + it.graph.edge_count());
            }
        } else {
            let max = model.schedule.iter().map(|it| it.graph.edge_count()).max().unwrap_or(0);
            edge_off.extend([max, 2 * max]);
        }
        let edges = *edge_off.last().unwrap();
        self.recorded = record;
        self.iterations = l;
        self.n = n;
        self.edge_off = edge_off;
        for buf in [&mut self.vn_msg, &mut self.tanh_half, &mut self.cn_arg, &mut self.cn_raw, &mut self.cn_out] {
            buf.clear();
            buf.resize(edges, 0.0);
        }
        self.edge_flags.clear();
        self.edge_flags.resize(edges, 0);
        self.sums.clear();
        self.sums.resize(slots * n, 0.0);
        self.outputs.clear();
        self.outputs.resize(l * n, 0.0);
        self.out_clamped.clear();
        self.out_clamped.resize(l * n, false);
        self.channel.clear();
    }

    pub(crate) fn fits(&self, model: &DecoderModel, record: bool) -> bool {
        if self.recorded != record || self.iterations != model.iterations() || self.n != model.n() {
            return false;
        }
        if record {
            model
                .schedule
                .iter()
                .enumerate()
                .all(|(i, it)| self.edge_off[i + 1] - self.edge_off[i] == it.graph.edge_count())
        } else {
            let max = model.schedule.iter().map(|it| it.graph.edge_count()).max().unwrap_or(0);
            self.edge_off[1] == max
        }
    }

    #[inline]
    pub(crate) fn slot(&self, l: usize) -> usize {
        if self.recorded {
            l
        } else {
            l % 2
        }
    }

    #[inline]
    pub(crate) fn edge_base(&self, l: usize) -> usize {
        self.edge_off[self.slot(l)]
    }

    /// Output LLRs of iteration `l` (0-based).
    pub fn output(&self, l: usize) -> &[f64] {
        &self.outputs[l * self.n..(l + 1) * self.n]
    }

    /// Output LLRs of every iteration, iteration-major.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn clear_outputs(&mut self) {
        self.outputs.iter_mut().for_each(|x| *x = 0.0);
    }
}

impl DecoderModel {
    /// Runs all iterations on `channel`, writing intermediates into `tape`.
    pub(crate) fn run_forward(&self, channel: &[f64], tape: &mut Tape, record: bool) {
        if !tape.fits(self, record) {
            tape.prepare(self, record);
        }
        tape.clear_outputs();
        tape.channel.clear();
        tape.channel.extend_from_slice(channel);
        let n = self.n();
        let clamp = self.clamp;
        let sat = 1.0 - self.saturation;
        let mode_untied = self.weights.mode() == super::WeightMode::Untied;
        let mut scratch_prefix: Vec<f64> = Vec::new();

        for l in 0..self.iterations() {
            let it = &self.schedule[l];
            let g = &it.graph;
            let base = tape.edge_base(l);
            let edges = g.edge_count();
            let slot = tape.slot(l);
            let w_ch = self.weights.channel(l);
            let w_vc = self.weights.vn_edge(l);
            let w_chk = self.weights.check(l);

            // VN update
            {
                let prev = if l == 0 {
                    None
                } else {
                    let pe = self.schedule[l - 1].graph.edge_count();
                    Some((tape.slot(l - 1) * n, tape.edge_base(l - 1), pe))
                };
                let Tape { vn_msg, edge_flags, sums, cn_out, .. } = &mut *tape;
                let edge_vn = g.edge_vns();
                for e in 0..edges {
                    let v = edge_vn[e] as usize;
                    let ext = match prev {
                        Some((sum_off, out_off, _)) => {
                            let pe = it.prev_edge[e];
                            let own = if pe == NO_EDGE { 0.0 } else { cn_out[out_off + pe as usize] };
                            sums[sum_off + v] - own
                        }
                        None => 0.0,
                    };
                    let pre = w_ch[v] * channel[v] + w_vc[e] * ext;
                    let (val, hit) = clamp_flag(pre, clamp);
                    vn_msg[base + e] = val;
                    edge_flags[base + e] = if hit { VN_CLAMPED } else { 0 };
                }
            }

            // CN update
            for c in 0..g.cn_count() {
                let r = g.cn_edge_range(c);
                let d = r.len();
                let start = base + r.start;
                for j in 0..d {
                    tape.tanh_half[start + j] = math::tanh(0.5 * tape.vn_msg[start + j]);
                }
                scratch_prefix.clear();
                let mut acc = 1.0;
                for j in 0..d {
                    scratch_prefix.push(acc);
                    acc *= tape.tanh_half[start + j];
                }
                let mut suffix = 1.0;
                for j in (0..d).rev() {
                    let arg = scratch_prefix[j] * suffix;
                    suffix *= tape.tanh_half[start + j];
                    let e = start + j;
                    tape.cn_arg[e] = arg;
                    let (a, saturated) = if arg > sat {
                        (sat, true)
                    } else if arg < -sat {
                        (-sat, true)
                    } else {
                        (arg, false)
                    };
                    let raw = 2.0 * math::atanh(a);
                    tape.cn_raw[e] = raw;
                    let w = if mode_untied { w_chk[r.start + j] } else { w_chk[c] };
                    let (out, hit) = clamp_flag(w * raw, clamp);
                    // +0.0 normalizes a signed zero so pruned and zero-weight CNs agree bitwise
                    tape.cn_out[e] = out + 0.0;
                    if saturated {
                        tape.edge_flags[e] |= ARG_SATURATED;
                    }
                    if hit {
                        tape.edge_flags[e] |= CN_CLAMPED;
                    }
                }
            }

            // marginalization
            let w_mc = self.weights.marg_channel(l);
            let w_ms = self.weights.marg_sum(l);
            for v in 0..n {
                let mut s = 0.0;
                for &e in g.vn_edges(v) {
                    s += tape.cn_out[base + e as usize];
                }
                tape.sums[slot * n + v] = s;
                let (out, hit) = clamp_flag(w_mc[v] * channel[v] + w_ms[v] * s, clamp);
                tape.outputs[l * n + v] = out;
                tape.out_clamped[l * n + v] = hit;
            }
        }
    }
}

#[inline]
pub(crate) fn clamp_flag(x: f64, bound: f64) -> (f64, bool) {
    if x > bound {
        (bound, true)
    } else if x < -bound {
        (-bound, true)
    } else {
        (x, false)
    }
}
