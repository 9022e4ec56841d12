//! Iterative magnitude pruning of check nodes and the derived decoders.
//!
//! The controller alternates between training and pruning: after each
//! training phase it removes the check nodes whose tied weight has the
//! smallest magnitude over all iterations, then retrains. It stops when the
//! CN-evaluation budget is met or when the validation loss keeps exceeding
//! the best loss seen so far by a factor `tau`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use crate::decoder::{DecoderModel, WeightMode};
use crate::error::invalid;
use crate::rng::{self, domain};
use crate::training::{self, LossTrace, TrainConfig, TrainFailure};
use crate::{Error, Result};

/// How prune targets are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMode {
    /// Smallest tied weight magnitude first.
    Magnitude,
    /// Uniformly at random without replacement (baseline).
    Random,
}

impl PruneMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PruneMode::Magnitude => "magnitude",
            PruneMode::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "magnitude" => Some(PruneMode::Magnitude),
            "random" => Some(PruneMode::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneConfig {
    /// Target number of CN evaluations (sum of rows over all iterations).
    pub budget: usize,
    /// CNs removed per cycle.
    pub per_cycle: usize,
    /// If set, each cycle removes at least this fraction of the remaining
    /// CNs (rounded up), for geometric batched pruning.
    pub per_cycle_fraction: Option<f64>,
    /// Divergence factor: a cycle counts as diverging when its validation
    /// loss exceeds `tau` times the best loss so far.
    pub tau: f64,
    /// Consecutive diverging cycles that stop the loop.
    pub patience: usize,
    pub mode: PruneMode,
    pub seed: u64,
    /// Permit pruning the last CN of an iteration.
    pub allow_empty: bool,
    /// Epoch limit of the retraining phases after the first one; `None` uses
    /// the training configuration's limit.
    pub retrain_max_epochs: Option<usize>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            budget: 0,
            per_cycle: 1,
            per_cycle_fraction: None,
            tau: 1.1,
            patience: 3,
            mode: PruneMode::Magnitude,
            seed: 0,
            allow_empty: false,
            retrain_max_epochs: None,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.per_cycle == 0 {
            return Err(invalid!("at least one CN must be pruned per cycle"));
        }
        if let Some(f) = self.per_cycle_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid!("per-cycle fraction must lie in (0, 1], got {f}"));
            }
        }
        if !(self.tau > 1.0) {
            return Err(invalid!("divergence factor must exceed 1, got {}", self.tau));
        }
        if self.patience == 0 {
            return Err(invalid!("patience must be positive"));
        }
        Ok(())
    }
}

impl PruneConfig {
    /// CNs to remove in a cycle that starts with `evals` CN evaluations.
    pub fn cycle_size(&self, evals: usize) -> usize {
        match self.per_cycle_fraction {
            Some(f) => self.per_cycle.max(libm::ceil(f * evals as f64) as usize),
            None => self.per_cycle,
        }
    }
}

/// One pruned check node.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneEntry {
    /// Cycle number, starting at 1.
    pub cycle: usize,
    /// Iteration (0-based).
    pub iteration: usize,
    /// Row index of the CN in its iteration's matrix at selection time.
    pub cn: usize,
    /// Tied weight when selected.
    pub weight: f64,
    /// Validation loss after the retraining that followed this cycle.
    pub val_loss: f64,
    /// CN evaluations left once this CN is gone.
    pub cn_evals: usize,
}

/// Why the controller stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The model already met the budget.
    NothingToPrune,
    BudgetReached,
    /// The validation loss diverged before the budget was met.
    Diverged,
    /// No further CN could be pruned (every iteration is down to one CN).
    Exhausted,
}

/// Audit trail of one prune/retrain run.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneRecord {
    pub entries: Vec<PruneEntry>,
    /// Validation loss after the first training phase.
    pub initial_val_loss: f64,
    /// Loss traces of every training phase, first phase included.
    pub traces: Vec<LossTrace>,
    pub stop: StopReason,
    /// Cycle whose model was returned (0 = before any pruning).
    pub returned_cycle: usize,
}

/// State passed to the progress callback after each cycle.
pub struct CycleReport<'a> {
    pub cycle: usize,
    pub model: &'a DecoderModel,
    pub val_loss: f64,
    pub cn_evals: usize,
}

/// Failure of the controller; carries the record accumulated so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneFailure {
    pub error: Error,
    pub record: PruneRecord,
}

impl From<PruneFailure> for Error {
    fn from(f: PruneFailure) -> Error {
        f.error
    }
}

impl From<TrainFailure> for Error {
    fn from(f: TrainFailure) -> Error {
        f.error
    }
}

/// Tied weights of every remaining CN as `(|w|, l, c, w)`.
fn magnitudes(model: &DecoderModel) -> Vec<(f64, usize, usize, f64)> {
    let mut out = Vec::with_capacity(model.cn_eval_count());
    for l in 0..model.iterations() {
        for (c, &w) in model.weights().check(l).iter().enumerate() {
            out.push((w.abs(), l, c, w));
        }
    }
    out
}

/// The `count` CNs with the smallest tied weight magnitude over all
/// iterations, in increasing magnitude; ties go to the smaller iteration,
/// then the smaller row index.
pub fn select_prune_targets(model: &DecoderModel, count: usize) -> Result<Vec<(usize, usize)>> {
    if model.mode() != WeightMode::CnTied {
        return Err(invalid!("magnitude selection needs a cn-tied model, got {}", model.mode().as_str()));
    }
    let total = model.cn_eval_count();
    if count > total {
        return Err(invalid!("cannot select {count} CNs, only {total} remain"));
    }
    let mut all = magnitudes(model);
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(all.into_iter().take(count).map(|(_, l, c, _)| (l, c)).collect())
}

// Targets for one cycle. Unless empty iterations are allowed, each
// iteration keeps at least one CN.
fn cycle_targets(model: &DecoderModel, cfg: &PruneConfig, count: usize, cycle: usize) -> Vec<(usize, usize, f64)> {
    let mut left: Vec<usize> = model.schedule().iter().map(|it| it.matrix().rows()).collect();
    let mut eligible = magnitudes(model);
    let mut picked = Vec::with_capacity(count);
    match cfg.mode {
        PruneMode::Magnitude => {
            eligible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            for (_, l, c, w) in eligible {
                if picked.len() == count {
                    break;
                }
                if left[l] > 1 || cfg.allow_empty {
                    left[l] -= 1;
                    picked.push((l, c, w));
                }
            }
        }
        PruneMode::Random => {
            let mut r = rng::stream(cfg.seed, &[domain::PRUNE, cycle as u64]);
            // a random permutation, then the same feasibility filter
            let order = index::sample(&mut r, eligible.len(), eligible.len());
            for i in order.iter() {
                if picked.len() == count {
                    break;
                }
                let (_, l, c, w) = eligible[i];
                if left[l] > 1 || cfg.allow_empty {
                    left[l] -= 1;
                    picked.push((l, c, w));
                }
            }
        }
    }
    picked
}

/// Removes the given CNs; row indices refer to the model before removal.
fn prune_all(model: &mut DecoderModel, targets: &[(usize, usize, f64)]) -> Result<()> {
    let mut order: Vec<(usize, usize)> = targets.iter().map(|&(l, c, _)| (l, c)).collect();
    // descending row index keeps the remaining indices valid
    order.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    for (l, c) in order {
        model.prune_cn(l, c)?;
    }
    Ok(())
}

/// Runs the train/prune loop. See [`prune_and_retrain_with`].
pub fn prune_and_retrain(
    model: &DecoderModel,
    prune: &PruneConfig,
    train: &TrainConfig,
) -> core::result::Result<(DecoderModel, PruneRecord), PruneFailure> {
    prune_and_retrain_with(model, prune, train, |_| {})
}

/// Runs the train/prune loop, calling `observe` after every cycle.
///
/// Returns the model at the end of the cycle that met the budget. If the loss
/// diverges first, the state with the lowest validation loss is returned and
/// the record's stop reason says so.
pub fn prune_and_retrain_with<F>(
    model: &DecoderModel,
    prune: &PruneConfig,
    train: &TrainConfig,
    mut observe: F,
) -> core::result::Result<(DecoderModel, PruneRecord), PruneFailure>
where
    F: FnMut(&CycleReport<'_>),
{
    let mut record = PruneRecord {
        entries: Vec::new(),
        initial_val_loss: f64::NAN,
        traces: Vec::new(),
        stop: StopReason::NothingToPrune,
        returned_cycle: 0,
    };
    macro_rules! bail {
        ($e:expr) => {
            return Err(PruneFailure { error: $e, record })
        };
    }
    if let Err(e) = prune.validate() {
        bail!(e);
    }
    if let Err(e) = train.validate() {
        bail!(e);
    }
    if model.mode() != WeightMode::CnTied {
        bail!(invalid!("pruning needs a cn-tied model, got {}", model.mode().as_str()));
    }
    let mut current = model.clone();
    current.set_allow_empty_iterations(prune.allow_empty || model.allows_empty_iterations());
    if current.cn_eval_count() <= prune.budget {
        return Ok((current, record));
    }

    let (trained, trace) = match training::train_phase(&current, train, 0) {
        Ok(x) => x,
        Err(f) => {
            record.traces.push(*f.trace);
            bail!(f.error)
        }
    };
    current = trained;
    let mut best_loss = trace.best_val_loss();
    record.initial_val_loss = best_loss;
    record.traces.push(trace);
    let mut best_model = current.clone();
    let mut best_cycle = 0;
    let mut strikes = 0;

    let mut retrain = train.clone();
    if let Some(e) = prune.retrain_max_epochs {
        retrain.max_epochs = e;
    }

    let mut cycle = 0;
    loop {
        let evals = current.cn_eval_count();
        if evals <= prune.budget {
            record.stop = StopReason::BudgetReached;
            record.returned_cycle = cycle;
            return Ok((current, record));
        }
        cycle += 1;
        let count = prune.cycle_size(evals).min(evals - prune.budget);
        let targets = cycle_targets(&current, prune, count, cycle);
        if targets.is_empty() {
            record.stop = StopReason::Exhausted;
            record.returned_cycle = cycle - 1;
            return Ok((current, record));
        }
        if let Err(e) = prune_all(&mut current, &targets) {
            bail!(e);
        }
        let (trained, trace) = match training::train_phase(&current, &retrain, cycle as u64) {
            Ok(x) => x,
            Err(f) => {
                record.traces.push(*f.trace);
                bail!(f.error)
            }
        };
        current = trained;
        let val = trace.best_val_loss();
        record.traces.push(trace);
        for (i, &(l, c, w)) in targets.iter().enumerate() {
            record.entries.push(PruneEntry { cycle, iteration: l, cn: c, weight: w, val_loss: val, cn_evals: evals - i - 1 });
        }
        let evals = current.cn_eval_count();
        log::info!("cycle {cycle}: {evals} CN evaluations, validation loss {val:.6e}");
        observe(&CycleReport { cycle, model: &current, val_loss: val, cn_evals: evals });

        if val < best_loss {
            best_loss = val;
            best_model = current.clone();
            best_cycle = cycle;
        }
        if val > prune.tau * best_loss {
            strikes += 1;
            if strikes >= prune.patience && evals > prune.budget {
                record.stop = StopReason::Diverged;
                record.returned_cycle = best_cycle;
                return Ok((best_model, record));
            }
        } else {
            strikes = 0;
        }
    }
}

/// Decoder D2: the pruned schedule with every weight one.
pub fn derive_d2(model: &DecoderModel) -> DecoderModel {
    model.to_plain()
}

/// Decoder D3: untied weights initialized from the tied ones, then retrained.
pub fn derive_d3(model: &DecoderModel, train: &TrainConfig) -> core::result::Result<(DecoderModel, LossTrace), TrainFailure> {
    let untied = match model.mode() {
        WeightMode::CnTied => model.to_untied(),
        m => Err(invalid!("D3 needs a cn-tied model, got {}", m.as_str())),
    };
    let untied = untied.map_err(|error| TrainFailure { error, trace: Default::default() })?;
    training::train_phase(&untied, train, u32::MAX as u64)
}

/// Human-readable summary of a stop reason.
pub fn describe_stop(reason: StopReason) -> String {
    String::from(match reason {
        StopReason::NothingToPrune => "budget already met",
        StopReason::BudgetReached => "budget reached",
        StopReason::Diverged => "validation loss diverged",
        StopReason::Exhausted => "no prunable CN left",
    })
}
