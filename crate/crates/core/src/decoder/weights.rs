use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::tanner::TannerGraph;

/// How check-node weights are shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightMode {
    /// Conventional BP: every weight is exactly one.
    Plain,
    /// One weight per check node and iteration.
    CnTied,
    /// One check weight per edge and iteration.
    Untied,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::Plain => "plain",
            WeightMode::CnTied => "cn-tied",
            WeightMode::Untied => "untied",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(WeightMode::Plain),
            "cn-tied" | "tied" => Some(WeightMode::CnTied),
            "untied" => Some(WeightMode::Untied),
            _ => None,
        }
    }

    pub fn trainable(self) -> bool {
        self != WeightMode::Plain
    }
}

/// Slot ranges of one iteration inside the flat weight vector.
///
/// Order within an iteration: channel weights (one per VN), VN edge weights
/// (one per edge, row-major edge ids), check weights (one per CN, or one per
/// edge when untied), then the marginalization channel and sum weights (one
/// per VN each).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationLayout {
    pub channel: Range<usize>,
    pub vn_edge: Range<usize>,
    pub check: Range<usize>,
    pub marg_channel: Range<usize>,
    pub marg_sum: Range<usize>,
}

impl IterationLayout {
    pub fn span(&self) -> Range<usize> {
        self.channel.start..self.marg_sum.end
    }
}

/// All decoder weights as one flat vector plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    mode: WeightMode,
    layout: Vec<IterationLayout>,
    values: Vec<f64>,
}

impl WeightSet {
    pub(crate) fn layout_for(mode: WeightMode, n: usize, graphs: &[&TannerGraph]) -> (Vec<IterationLayout>, usize) {
        let mut off = 0;
        let mut take = |len: usize| {
            let r = off..off + len;
            off += len;
            r
        };
        let layout = graphs
            .iter()
            .map(|g| {
                let channel = take(n);
                let vn_edge = take(g.edge_count());
                let check = take(match mode {
                    WeightMode::Untied => g.edge_count(),
                    _ => g.cn_count(),
                });
                let marg_channel = take(n);
                let marg_sum = take(n);
                IterationLayout { channel, vn_edge, check, marg_channel, marg_sum }
            })
            .collect();
        (layout, off)
    }

    /// All-ones weights for the given graphs.
    pub fn ones(mode: WeightMode, n: usize, graphs: &[&TannerGraph]) -> Self {
        let (layout, len) = Self::layout_for(mode, n, graphs);
        WeightSet { mode, layout, values: alloc::vec![1.0; len] }
    }

    /// Weights from an explicit flat vector, which must match the layout.
    pub fn from_values(mode: WeightMode, n: usize, graphs: &[&TannerGraph], values: Vec<f64>) -> Option<Self> {
        let (layout, len) = Self::layout_for(mode, n, graphs);
        (values.len() == len).then_some(WeightSet { mode, layout, values })
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[IterationLayout] {
        &self.layout
    }

    pub fn iteration(&self, l: usize) -> &IterationLayout {
        &self.layout[l]
    }

    pub fn channel(&self, l: usize) -> &[f64] {
        &self.values[self.layout[l].channel.clone()]
    }

    pub fn vn_edge(&self, l: usize) -> &[f64] {
        &self.values[self.layout[l].vn_edge.clone()]
    }

    pub fn check(&self, l: usize) -> &[f64] {
        &self.values[self.layout[l].check.clone()]
    }

    pub fn marg_channel(&self, l: usize) -> &[f64] {
        &self.values[self.layout[l].marg_channel.clone()]
    }

    pub fn marg_sum(&self, l: usize) -> &[f64] {
        &self.values[self.layout[l].marg_sum.clone()]
    }

    /// Scales every CN weight (tied or untied) by `factor`.
    pub fn decay_checks(&mut self, factor: f64) {
        for l in 0..self.layout.len() {
            let r = self.layout[l].check.clone();
            for w in &mut self.values[r] {
                *w *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|w| w.is_finite())
    }

    /// Human-readable name of a flat slot index.
    pub fn describe_slot(&self, slot: usize) -> String {
        for (l, it) in self.layout.iter().enumerate() {
            let at = |r: &Range<usize>| slot - r.start;
            if it.channel.contains(&slot) {
                return format!("iteration {} channel weight of VN {}", l + 1, at(&it.channel));
            }
            if it.vn_edge.contains(&slot) {
                return format!("iteration {} VN weight of edge {}", l + 1, at(&it.vn_edge));
            }
            if it.check.contains(&slot) {
                let what = if self.mode == WeightMode::Untied { "edge" } else { "CN" };
                return format!("iteration {} check weight of {what} {}", l + 1, at(&it.check));
            }
            if it.marg_channel.contains(&slot) {
                return format!("iteration {} output channel weight of VN {}", l + 1, at(&it.marg_channel));
            }
            if it.marg_sum.contains(&slot) {
                return format!("iteration {} output sum weight of VN {}", l + 1, at(&it.marg_sum));
            }
        }
        format!("slot {slot} (out of range)")
    }
}
