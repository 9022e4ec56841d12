// Reverse pass over a recorded forward decode.
//
// Iterations are replayed last to first. Within an iteration the order is
// output, CN update, VN update, i.e. the reverse of the forward order. A
// clamp that was active passes no adjoint; an `atanh` argument that was
// saturated passes none either.

use alloc::vec::Vec;

use crate::decoder::{DecoderModel, Tape, WeightMode, ARG_SATURATED, CN_CLAMPED, NO_EDGE, VN_CLAMPED};
use crate::{Error, Result};

/// Reusable adjoint buffers.
#[derive(Debug, Clone, Default)]
pub struct Adjoints {
    sum_cur: Vec<f64>,
    sum_prev: Vec<f64>,
    cn_cur: Vec<f64>,
    cn_prev: Vec<f64>,
    vn: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    g_arg: Vec<f64>,
    g_t: Vec<f64>,
}

/// Accumulates `d loss / d weight` into `grads` (same layout as the model's
/// weight vector), given `d loss / d output` for every output LLR in
/// `out_adjoint` (iteration-major).
pub fn backward(model: &DecoderModel, tape: &Tape, out_adjoint: &[f64], grads: &mut [f64], adj: &mut Adjoints) -> Result<()> {
    let n = model.n();
    let iters = model.iterations();
    if !tape.recorded || tape.iterations != iters || tape.n != n {
        return Err(Error::ShapeMismatch("tape was not recorded for this model".into()));
    }
    if out_adjoint.len() != iters * n || grads.len() != model.weights().len() {
        return Err(Error::ShapeMismatch("adjoint or gradient buffer has the wrong length".into()));
    }
    for (l, it) in model.schedule().iter().enumerate() {
        if tape.edge_off[l + 1] - tape.edge_off[l] != it.graph().edge_count() {
            return Err(Error::ShapeMismatch("tape does not match the schedule".into()));
        }
    }
    let weights = model.weights();
    let untied = weights.mode() == WeightMode::Untied;
    let channel = &tape.channel;

    adj.sum_cur.clear();
    adj.sum_cur.resize(n, 0.0);
    let max_edges = model.schedule().iter().map(|it| it.graph().edge_count()).max().unwrap_or(0);
    adj.cn_cur.clear();
    adj.cn_cur.resize(max_edges, 0.0);

    for l in (0..iters).rev() {
        let it = &model.schedule()[l];
        let g = it.graph();
        let edges = g.edge_count();
        let base = tape.edge_off[l];
        let lay = weights.iteration(l).clone();
        let sums = &tape.sums[l * n..(l + 1) * n];

        adj.sum_prev.clear();
        adj.sum_prev.resize(n, 0.0);
        let prev_edges = if l > 0 { model.schedule()[l - 1].graph().edge_count() } else { 0 };
        adj.cn_prev.clear();
        adj.cn_prev.resize(prev_edges, 0.0);

        // output
        let w_ms = weights.marg_sum(l);
        for v in 0..n {
            let idx = l * n + v;
            if tape.out_clamped[idx] {
                continue;
            }
            let gp = out_adjoint[idx];
            grads[lay.marg_channel.start + v] += gp * channel[v];
            grads[lay.marg_sum.start + v] += gp * sums[v];
            adj.sum_cur[v] += gp * w_ms[v];
        }

        // CN outputs feed the sums
        let edge_vn = g.edge_vns();
        for e in 0..edges {
            adj.cn_cur[e] += adj.sum_cur[edge_vn[e] as usize];
        }

        // CN update
        adj.vn.clear();
        adj.vn.resize(edges, 0.0);
        let w_chk = weights.check(l);
        for c in 0..g.cn_count() {
            let r = g.cn_edge_range(c);
            let d = r.len();
            let t = &tape.tanh_half[base + r.start..base + r.end];
            adj.prefix.clear();
            adj.suffix.clear();
            adj.suffix.resize(d, 1.0);
            let mut acc = 1.0;
            for &x in t {
                adj.prefix.push(acc);
                acc *= x;
            }
            let mut acc = 1.0;
            for j in (0..d).rev() {
                adj.suffix[j] = acc;
                acc *= t[j];
            }
            adj.g_arg.clear();
            for j in 0..d {
                let e = base + r.start + j;
                let flags = tape.edge_flags[e];
                let gout = if flags & CN_CLAMPED != 0 { 0.0 } else { adj.cn_cur[r.start + j] };
                let slot = if untied { lay.check.start + r.start + j } else { lay.check.start + c };
                let w = if untied { w_chk[r.start + j] } else { w_chk[c] };
                grads[slot] += gout * tape.cn_raw[e];
                let g_arg = if flags & ARG_SATURATED != 0 {
                    0.0
                } else {
                    let a = tape.cn_arg[e];
                    gout * w * 2.0 / (1.0 - a * a)
                };
                adj.g_arg.push(g_arg);
            }
            // d arg_i / d t_j = prod over k != i, j of t_k, via running sums
            let mut fwd = 0.0;
            let gt = &mut adj.g_t;
            gt.clear();
            gt.resize(d, 0.0);
            for j in 0..d {
                gt[j] = fwd * adj.suffix[j];
                fwd = fwd * t[j] + adj.g_arg[j] * adj.prefix[j];
            }
            let mut bwd = 0.0;
            for j in (0..d).rev() {
                gt[j] += adj.prefix[j] * bwd;
                bwd = bwd * t[j] + adj.g_arg[j] * adj.suffix[j];
            }
            for j in 0..d {
                adj.vn[r.start + j] = gt[j] * 0.5 * (1.0 - t[j] * t[j]);
            }
        }

        // VN update
        let w_vc = weights.vn_edge(l);
        let prev_sums = if l > 0 { Some(&tape.sums[(l - 1) * n..l * n]) } else { None };
        let prev_base = if l > 0 { tape.edge_off[l - 1] } else { 0 };
        for e in 0..edges {
            if tape.edge_flags[base + e] & VN_CLAMPED != 0 {
                continue;
            }
            let gp = adj.vn[e];
            let v = edge_vn[e] as usize;
            grads[lay.channel.start + v] += gp * channel[v];
            if let Some(ps) = prev_sums {
                let pe = it.prev_edge_raw(e);
                let own = if pe == NO_EDGE { 0.0 } else { tape.cn_out[prev_base + pe as usize] };
                let ext = ps[v] - own;
                grads[lay.vn_edge.start + e] += gp * ext;
                let g_ext = gp * w_vc[e];
                adj.sum_prev[v] += g_ext;
                if pe != NO_EDGE {
                    adj.cn_prev[pe as usize] -= g_ext;
                }
            }
        }

        core::mem::swap(&mut adj.sum_cur, &mut adj.sum_prev);
        adj.cn_cur.clear();
        adj.cn_cur.extend_from_slice(&adj.cn_prev);
        adj.cn_cur.resize(max_edges, 0.0);
    }
    Ok(())
}
