//! Unrolled weighted belief-propagation decoder.
//!
//! A [`DecoderModel`] runs a fixed number of iterations; iteration `l` uses
//! its own parity-check matrix `H_l`. One iteration consists of
//!
//! 1. the VN update
//!    `m(v->c) = w_v * llr_v + w_vc * (sum over c' != c of m(c'->v))`,
//!    where the incoming messages are those of the previous iteration,
//! 2. the CN update
//!    `m(c->v) = 2 * W * atanh(prod over v' != v of tanh(m(v'->c) / 2))`,
//!    with `W = 1`, the tied check weight `w_c`, or the per-edge weight,
//! 3. the output `out_v = a_v * llr_v + b_v * (sum over c of m(c->v))`.
//!
//! Check nodes are identified across iterations by their parity-check
//! equation. The message a VN excludes when replying to check `c` is the one
//! `c` itself sent in the previous iteration; if `c` was absent there, nothing
//! is excluded. With this rule a pruned check and a check whose tied weight is
//! zero give identical decoder outputs.
//!
//! Every message and output is clamped to `[-clamp, clamp]`, and the argument
//! of `atanh` is saturated at `1 - saturation`.

mod tape;
mod weights;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::codes::CodeSpec;
use crate::error::invalid;
use crate::gf2::BinaryMatrix;
use crate::tanner::TannerGraph;
use crate::{par, Error, Result};

pub use tape::Tape;
pub(crate) use tape::{ARG_SATURATED, CN_CLAMPED, VN_CLAMPED};
pub use weights::{IterationLayout, WeightMode, WeightSet};

/// Default LLR clamp.
pub const DEFAULT_CLAMP: f64 = 20.0;
/// Default saturation margin of the `atanh` argument.
pub const DEFAULT_SATURATION: f64 = 1e-7;

pub(crate) const NO_EDGE: u32 = u32::MAX;

/// Channel LLRs of one received word. Positive values favour bit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame(Vec<f64>);

impl LlrFrame {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(invalid!("LLR at position {i} is not finite"));
        }
        Ok(LlrFrame(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl core::ops::Neg for &LlrFrame {
    type Output = LlrFrame;
    fn neg(self) -> LlrFrame {
        LlrFrame(self.0.iter().map(|x| -x).collect())
    }
}

impl AsRef<[f64]> for LlrFrame {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Result of decoding one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Output LLRs, one vector per iteration.
    pub llrs: Vec<Vec<f64>>,
    /// Hard decision of the last iteration (bit 1 iff LLR < 0).
    pub hard_decision: Vec<u8>,
    /// Whether each iteration's hard decision satisfies the reference checks.
    pub syndrome_ok: Vec<bool>,
}

/// Hard decision of an LLR vector; zero maps to bit 0.
pub fn hard_decision(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&x| (x < 0.0) as u8).collect()
}

/// One unrolled iteration: its parity-check matrix, graph and check identities.
#[derive(Debug, Clone, PartialEq)]
pub struct Iteration {
    matrix: BinaryMatrix,
    graph: TannerGraph,
    check_ids: Vec<u32>,
    // For every edge, the edge of the same (check, variable) pair in the
    // previous iteration, or NO_EDGE.
    prev_edge: Vec<u32>,
}

impl Iteration {
    pub fn matrix(&self) -> &BinaryMatrix {
        &self.matrix
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    #[inline]
    pub(crate) fn prev_edge_raw(&self, e: usize) -> u32 {
        self.prev_edge[e]
    }

    /// Identity of each row; equal parity-check equations share an id.
    pub fn check_ids(&self) -> &[u32] {
        &self.check_ids
    }
}

/// Unrolled decoder: schedule of parity-check matrices plus weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderModel {
    code: CodeSpec,
    reference: BinaryMatrix,
    schedule: Vec<Iteration>,
    weights: WeightSet,
    clamp: f64,
    saturation: f64,
    allow_empty: bool,
}

impl DecoderModel {
    /// Model with all weights one.
    ///
    /// `reference` is the parity-check matrix used for syndrome flags; it is
    /// never pruned.
    pub fn new(code: CodeSpec, reference: BinaryMatrix, schedule: Vec<BinaryMatrix>, mode: WeightMode) -> Result<Self> {
        let iterations = Self::build_schedule(&code, &reference, schedule, false)?;
        let graphs: Vec<&TannerGraph> = iterations.iter().map(|i| &i.graph).collect();
        let weights = WeightSet::ones(mode, code.n(), &graphs);
        Ok(DecoderModel {
            code,
            reference,
            schedule: iterations,
            weights,
            clamp: DEFAULT_CLAMP,
            saturation: DEFAULT_SATURATION,
            allow_empty: false,
        })
    }

    /// Model using `h` in each of `iterations` iterations.
    pub fn repeated(code: CodeSpec, reference: BinaryMatrix, h: &BinaryMatrix, iterations: usize, mode: WeightMode) -> Result<Self> {
        Self::new(code, reference, vec![h.clone(); iterations], mode)
    }

    /// Model with explicit weights (for loading bundles).
    pub fn with_weights(
        code: CodeSpec,
        reference: BinaryMatrix,
        schedule: Vec<BinaryMatrix>,
        mode: WeightMode,
        values: Vec<f64>,
        allow_empty: bool,
    ) -> Result<Self> {
        let iterations = Self::build_schedule(&code, &reference, schedule, allow_empty)?;
        let graphs: Vec<&TannerGraph> = iterations.iter().map(|i| &i.graph).collect();
        let len = WeightSet::layout_for(mode, code.n(), &graphs).1;
        let got = values.len();
        let weights = WeightSet::from_values(mode, code.n(), &graphs, values)
            .ok_or_else(|| Error::ShapeMismatch(format!("expected {len} weights, got {got}")))?;
        if !weights.all_finite() {
            return Err(invalid!("weights must be finite"));
        }
        if mode == WeightMode::Plain && weights.values().iter().any(|&w| w != 1.0) {
            return Err(invalid!("plain mode requires all weights to be exactly one"));
        }
        Ok(DecoderModel {
            code,
            reference,
            schedule: iterations,
            weights,
            clamp: DEFAULT_CLAMP,
            saturation: DEFAULT_SATURATION,
            allow_empty,
        })
    }

    fn build_schedule(
        code: &CodeSpec,
        reference: &BinaryMatrix,
        schedule: Vec<BinaryMatrix>,
        allow_empty: bool,
    ) -> Result<Vec<Iteration>> {
        if schedule.is_empty() {
            return Err(invalid!("schedule needs at least one iteration"));
        }
        if reference.cols() != code.n() {
            return Err(invalid!("reference matrix has {} columns, code length is {}", reference.cols(), code.n()));
        }
        let mut ids: BTreeMap<Vec<u64>, u32> = BTreeMap::new();
        let mut out: Vec<Iteration> = Vec::with_capacity(schedule.len());
        for (l, h) in schedule.into_iter().enumerate() {
            if h.cols() != code.n() {
                return Err(invalid!("iteration {}: matrix has {} columns, code length is {}", l + 1, h.cols(), code.n()));
            }
            if h.rows() == 0 && !allow_empty {
                return Err(Error::EmptyIteration { iteration: l + 1 });
            }
            let graph = TannerGraph::build_allow_empty(&h).map_err(|e| invalid!("iteration {}: {e}", l + 1))?;
            let check_ids = (0..h.rows())
                .map(|r| {
                    let next = ids.len() as u32;
                    *ids.entry(h.row_words(r).to_vec()).or_insert(next)
                })
                .collect();
            out.push(Iteration { matrix: h, graph, check_ids, prev_edge: Vec::new() });
        }
        for l in 0..out.len() {
            Self::link(&mut out, l);
        }
        Ok(out)
    }

    // Recomputes prev_edge of iteration l.
    fn link(schedule: &mut [Iteration], l: usize) {
        if l == 0 {
            let e = schedule[0].graph.edge_count();
            schedule[0].prev_edge = vec![NO_EDGE; e];
            return;
        }
        let (before, after) = schedule.split_at_mut(l);
        let prev = &before[l - 1];
        let cur = &mut after[0];
        let mut row_of: BTreeMap<u32, usize> = BTreeMap::new();
        for (r, &id) in prev.check_ids.iter().enumerate() {
            row_of.insert(id, r);
        }
        let mut map = vec![NO_EDGE; cur.graph.edge_count()];
        for c in 0..cur.graph.cn_count() {
            if let Some(&pc) = row_of.get(&cur.check_ids[c]) {
                // same equation, so same support: edges line up one to one
                let pr = prev.graph.cn_edge_range(pc);
                for (k, e) in cur.graph.cn_edge_range(c).enumerate() {
                    map[e] = (pr.start + k) as u32;
                }
            }
        }
        cur.prev_edge = map;
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn iterations(&self) -> usize {
        self.schedule.len()
    }

    pub fn schedule(&self) -> &[Iteration] {
        &self.schedule
    }

    pub fn reference(&self) -> &BinaryMatrix {
        &self.reference
    }

    pub fn mode(&self) -> WeightMode {
        self.weights.mode()
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    pub fn clamp(&self) -> f64 {
        self.clamp
    }

    pub fn saturation(&self) -> f64 {
        self.saturation
    }

    pub fn allows_empty_iterations(&self) -> bool {
        self.allow_empty
    }

    pub fn set_allow_empty_iterations(&mut self, allow: bool) {
        self.allow_empty = allow;
    }

    pub fn set_clamp(&mut self, clamp: f64) -> Result<()> {
        if !(clamp > 0.0 && clamp.is_finite()) {
            return Err(invalid!("clamp must be positive and finite, got {clamp}"));
        }
        self.clamp = clamp;
        Ok(())
    }

    pub fn set_saturation(&mut self, eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid!("saturation margin must lie in (0, 1), got {eps}"));
        }
        self.saturation = eps;
        Ok(())
    }

    /// Replaces all weight values. Fails on shape mismatch, non-finite
    /// values, or any non-unit value in plain mode.
    pub fn set_weight_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.weights.len() {
            return Err(Error::ShapeMismatch(format!("expected {} weights, got {}", self.weights.len(), values.len())));
        }
        if values.iter().any(|w| !w.is_finite()) {
            return Err(invalid!("weights must be finite"));
        }
        if self.mode() == WeightMode::Plain && values.iter().any(|&w| w != 1.0) {
            return Err(invalid!("plain mode requires all weights to be exactly one"));
        }
        self.weights.values_mut().copy_from_slice(values);
        Ok(())
    }

    /// Tied check weight of CN `c` in iteration `l` (0-based).
    pub fn cn_weight(&self, l: usize, c: usize) -> Result<f64> {
        if self.mode() == WeightMode::Untied {
            return Err(invalid!("untied models have no per-CN weights"));
        }
        self.weights.check(l).get(c).copied().ok_or_else(|| invalid!("CN {c} out of range in iteration {}", l + 1))
    }

    /// Sets the tied check weight of CN `c` in iteration `l` (0-based).
    pub fn set_cn_weight(&mut self, l: usize, c: usize, w: f64) -> Result<()> {
        if self.mode() != WeightMode::CnTied {
            return Err(invalid!("per-CN weights can only be set in cn-tied mode"));
        }
        if !w.is_finite() {
            return Err(invalid!("weight must be finite"));
        }
        let r = self.weights.iteration(l).check.clone();
        if c >= r.len() {
            return Err(invalid!("CN {c} out of range in iteration {}", l + 1));
        }
        self.weights.values_mut()[r.start + c] = w;
        Ok(())
    }

    /// Total number of check-node evaluations, `sum over l of rows(H_l)`.
    pub fn cn_eval_count(&self) -> usize {
        self.schedule.iter().map(|it| it.matrix.rows()).sum()
    }

    /// Share of the remaining check nodes used by each iteration.
    pub fn cn_fraction_per_iteration(&self) -> Result<Vec<f64>> {
        let total = self.cn_eval_count();
        if total == 0 {
            return Err(invalid!("no check nodes remain"));
        }
        Ok(self.schedule.iter().map(|it| it.matrix.rows() as f64 / total as f64).collect())
    }

    /// Removes check node `c` from iteration `l` (0-based) together with all
    /// weight slots attached to it and its edges.
    pub fn prune_cn(&mut self, l: usize, c: usize) -> Result<()> {
        let it = self.schedule.get(l).ok_or_else(|| invalid!("iteration {} out of range", l + 1))?;
        let m = it.matrix.rows();
        if c >= m {
            return Err(invalid!("CN {c} out of range in iteration {} ({m} CNs)", l + 1));
        }
        if m == 1 && !self.allow_empty {
            return Err(Error::EmptyIteration { iteration: l + 1 });
        }
        let old_edges = it.graph.cn_edge_range(c);
        let matrix = it.matrix.without_row(c);
        let graph = TannerGraph::build_allow_empty(&matrix)?;
        let mut check_ids = it.check_ids.clone();
        check_ids.remove(c);

        // drop the slots of this CN and its edges
        let lay = self.weights.iteration(l).clone();
        let values = self.weights.values();
        let mut next: Vec<f64> = Vec::with_capacity(values.len());
        next.extend_from_slice(&values[..lay.vn_edge.start]);
        let ve = &values[lay.vn_edge.clone()];
        next.extend_from_slice(&ve[..old_edges.start]);
        next.extend_from_slice(&ve[old_edges.end..]);
        let ck = &values[lay.check.clone()];
        match self.mode() {
            WeightMode::Untied => {
                next.extend_from_slice(&ck[..old_edges.start]);
                next.extend_from_slice(&ck[old_edges.end..]);
            }
            _ => {
                next.extend_from_slice(&ck[..c]);
                next.extend_from_slice(&ck[c + 1..]);
            }
        }
        next.extend_from_slice(&values[lay.marg_channel.start..]);

        self.schedule[l] = Iteration { matrix, graph, check_ids, prev_edge: Vec::new() };
        Self::link(&mut self.schedule, l);
        if l + 1 < self.schedule.len() {
            Self::link(&mut self.schedule, l + 1);
        }
        let graphs: Vec<&TannerGraph> = self.schedule.iter().map(|i| &i.graph).collect();
        self.weights = WeightSet::from_values(self.mode(), self.n(), &graphs, next).expect("pruned layout is consistent");
        Ok(())
    }

    /// Same schedule with every weight set to one (conventional BP).
    pub fn to_plain(&self) -> DecoderModel {
        let graphs: Vec<&TannerGraph> = self.schedule.iter().map(|i| &i.graph).collect();
        let weights = WeightSet::ones(WeightMode::Plain, self.n(), &graphs);
        DecoderModel { weights, ..self.clone() }
    }

    /// Converts a CN-tied model to untied weights, copying each check weight
    /// onto all of its edges.
    pub fn to_untied(&self) -> Result<DecoderModel> {
        match self.mode() {
            WeightMode::Untied => return Ok(self.clone()),
            WeightMode::Plain | WeightMode::CnTied => {}
        }
        let graphs: Vec<&TannerGraph> = self.schedule.iter().map(|i| &i.graph).collect();
        let mut values = Vec::new();
        for (l, it) in self.schedule.iter().enumerate() {
            values.extend_from_slice(self.weights.channel(l));
            values.extend_from_slice(self.weights.vn_edge(l));
            let ck = self.weights.check(l);
            for c in 0..it.graph.cn_count() {
                values.extend(core::iter::repeat_n(ck[c], it.graph.cn_degree(c)));
            }
            values.extend_from_slice(self.weights.marg_channel(l));
            values.extend_from_slice(self.weights.marg_sum(l));
        }
        let weights = WeightSet::from_values(WeightMode::Untied, self.n(), &graphs, values).expect("untied layout is consistent");
        Ok(DecoderModel { weights, ..self.clone() })
    }

    /// Converts a plain model into a trainable CN-tied one (all weights one).
    pub fn to_cn_tied(&self) -> Result<DecoderModel> {
        match self.mode() {
            WeightMode::CnTied => Ok(self.clone()),
            WeightMode::Plain => {
                let graphs: Vec<&TannerGraph> = self.schedule.iter().map(|i| &i.graph).collect();
                let weights = WeightSet::ones(WeightMode::CnTied, self.n(), &graphs);
                Ok(DecoderModel { weights, ..self.clone() })
            }
            WeightMode::Untied => Err(invalid!("an untied model cannot be tied again")),
        }
    }

    fn check_frame(&self, frame: &[f64]) -> Result<()> {
        if frame.len() != self.n() {
            return Err(Error::ShapeMismatch(format!("frame has length {}, code length is {}", frame.len(), self.n())));
        }
        Ok(())
    }

    /// Decodes one frame, running all iterations.
    pub fn decode(&self, frame: &LlrFrame) -> Result<DecodeOutput> {
        let mut tape = Tape::default();
        self.decode_with(frame, &mut tape)
    }

    /// Like [`DecoderModel::decode`] with a reusable work buffer.
    pub fn decode_with(&self, frame: &LlrFrame, tape: &mut Tape) -> Result<DecodeOutput> {
        self.check_frame(frame.values())?;
        self.run_forward(frame.values(), tape, false);
        let llrs: Vec<Vec<f64>> = (0..self.iterations()).map(|l| tape.output(l).to_vec()).collect();
        let syndrome_ok = llrs.iter().map(|o| self.reference.syndrome_is_zero(&hard_decision(o))).collect();
        let hard_decision = hard_decision(llrs.last().expect("at least one iteration"));
        Ok(DecodeOutput { llrs, hard_decision, syndrome_ok })
    }

    /// Hard decision of the last iteration only.
    pub fn decode_hard(&self, frame: &[f64], tape: &mut Tape) -> Result<Vec<u8>> {
        self.check_frame(frame)?;
        self.run_forward(frame, tape, false);
        Ok(hard_decision(tape.output(self.iterations() - 1)))
    }

    /// Decodes many frames; output order follows input order.
    pub fn decode_batch(&self, frames: &[LlrFrame]) -> Result<Vec<DecodeOutput>> {
        par::map_indexed(frames.len(), |i| self.decode(&frames[i])).into_iter().collect()
    }

    /// Forward pass recording everything needed for gradients.
    pub fn forward_recorded(&self, frame: &LlrFrame, tape: &mut Tape) -> Result<()> {
        self.check_frame(frame.values())?;
        self.run_forward(frame.values(), tape, true);
        Ok(())
    }

    /// VN update of iteration `l` (0-based). `prev_cn_messages` holds the CN
    /// messages produced by iteration `l - 1`, indexed by that iteration's
    /// edges (the edges of `H_l` as long as both iterations share a matrix);
    /// pass an empty slice for the first iteration. Returns one message per
    /// edge of `H_l`.
    pub fn vn_update(&self, l: usize, channel: &LlrFrame, prev_cn_messages: &[f64]) -> Result<Vec<f64>> {
        self.check_frame(channel.values())?;
        let it = self.schedule.get(l).ok_or_else(|| invalid!("iteration {} out of range", l + 1))?;
        let g = &it.graph;
        let prev_sum = if l == 0 {
            if !prev_cn_messages.is_empty() && prev_cn_messages.iter().any(|&x| x != 0.0) {
                return Err(Error::ShapeMismatch("the first iteration has no incoming CN messages".into()));
            }
            vec![0.0; self.n()]
        } else {
            let pg = &self.schedule[l - 1].graph;
            if prev_cn_messages.len() != pg.edge_count() {
                return Err(Error::ShapeMismatch(format!(
                    "expected {} CN messages, got {}",
                    pg.edge_count(),
                    prev_cn_messages.len()
                )));
            }
            (0..self.n()).map(|v| pg.vn_edges(v).iter().fold(0.0, |s, &e| s + prev_cn_messages[e as usize])).collect()
        };
        let w_ch = self.weights.channel(l);
        let w_vc = self.weights.vn_edge(l);
        let ch = channel.values();
        Ok((0..g.edge_count())
            .map(|e| {
                let (v, _) = g.edge(e);
                let own = match it.prev_edge.get(e) {
                    Some(&p) if p != NO_EDGE && l > 0 => prev_cn_messages[p as usize],
                    _ => 0.0,
                };
                let ext = prev_sum[v] - own;
                tape::clamp_flag(w_ch[v] * ch[v] + w_vc[e] * ext, self.clamp).0
            })
            .collect())
    }

    /// CN update of iteration `l` (0-based) on messages indexed by its edges.
    pub fn cn_update(&self, l: usize, vn_messages: &[f64]) -> Result<Vec<f64>> {
        let it = self.schedule.get(l).ok_or_else(|| invalid!("iteration {} out of range", l + 1))?;
        let g = &it.graph;
        if vn_messages.len() != g.edge_count() {
            return Err(Error::ShapeMismatch(format!("expected {} VN messages, got {}", g.edge_count(), vn_messages.len())));
        }
        let sat = 1.0 - self.saturation;
        let ck = self.weights.check(l);
        let mut out = vec![0.0; g.edge_count()];
        for c in 0..g.cn_count() {
            let r = g.cn_edge_range(c);
            let t: Vec<f64> = vn_messages[r.clone()].iter().map(|&m| crate::math::tanh(0.5 * m)).collect();
            let mut prefix = Vec::with_capacity(t.len());
            let mut acc = 1.0;
            for &x in &t {
                prefix.push(acc);
                acc *= x;
            }
            let mut suffix = 1.0;
            for j in (0..t.len()).rev() {
                let arg = (prefix[j] * suffix).clamp(-sat, sat);
                suffix *= t[j];
                let w = if self.mode() == WeightMode::Untied { ck[r.start + j] } else { ck[c] };
                out[r.start + j] = tape::clamp_flag(w * 2.0 * crate::math::atanh(arg), self.clamp).0 + 0.0;
            }
        }
        Ok(out)
    }

    /// Output LLRs of iteration `l` (0-based) from its CN messages.
    pub fn marginalize(&self, l: usize, channel: &LlrFrame, cn_messages: &[f64]) -> Result<Vec<f64>> {
        self.check_frame(channel.values())?;
        let it = self.schedule.get(l).ok_or_else(|| invalid!("iteration {} out of range", l + 1))?;
        let g = &it.graph;
        if cn_messages.len() != g.edge_count() {
            return Err(Error::ShapeMismatch(format!("expected {} CN messages, got {}", g.edge_count(), cn_messages.len())));
        }
        let a = self.weights.marg_channel(l);
        let b = self.weights.marg_sum(l);
        Ok((0..self.n())
            .map(|v| {
                let s = g.vn_edges(v).iter().fold(0.0, |s, &e| s + cn_messages[e as usize]);
                tape::clamp_flag(a[v] * channel.values()[v] + b[v] * s, self.clamp).0
            })
            .collect())
    }
}

#[cfg(test)]
mod tests;
