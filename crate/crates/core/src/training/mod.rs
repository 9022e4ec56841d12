//! Gradient-based training of decoder weights.
//!
//! Training transmits the all-zero codeword only. Each step samples a batch
//! of noisy all-zero frames, runs a recorded forward pass per frame, forms the
//! soft bit-error-rate multiloss and its exact gradient, and applies one Adam
//! step. Frames are processed in fixed chunks whose partial gradients are
//! summed in chunk order, so results do not depend on the worker count.

mod adam;
mod backward;
mod loss;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{awgn_llr, ChannelPoint};
use crate::codes::CodeSpec;
use crate::decoder::{DecoderModel, LlrFrame, Tape};
use crate::error::invalid;
use crate::rng::{self, domain};
use crate::{par, Error, Result};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, Adjoints};
pub use loss::{batch_multiloss, multiloss_adjoint, multiloss_coefficients, soft_ber_multiloss};

/// Frames per parallel work item.
const CHUNK: usize = 32;

/// Settings of one training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Frames per optimizer step.
    pub batch_size: usize,
    /// Training Eb/N0 is drawn uniformly from this closed range (dB).
    pub ebn0_range: (f64, f64),
    pub adam: AdamConfig,
    /// `(epoch fraction, eta)` breakpoints; the last entry whose fraction is
    /// at most `epoch / max_epochs` is in effect.
    pub eta_schedule: Vec<(f64, f64)>,
    pub max_epochs: usize,
    /// Optimizer steps per epoch.
    pub steps_per_epoch: usize,
    /// Frames of the fixed validation set.
    pub validation_size: usize,
    /// Stop once the best validation loss improved by less than
    /// `tolerance` (relative) over the last `window` epochs.
    pub window: usize,
    pub tolerance: f64,
    /// Decoupled decay applied to CN weights after every optimizer step,
    /// `w <- w - learning_rate * decay * w`. Zero gives plain Adam.
    pub cn_weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            ebn0_range: (1.0, 5.0),
            adam: AdamConfig::default(),
            eta_schedule: vec![(0.0, 1.0), (0.5, 0.5), (0.75, 0.0)],
            max_epochs: 100,
            steps_per_epoch: 10,
            validation_size: 2048,
            window: 10,
            tolerance: 1e-4,
            cn_weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.steps_per_epoch == 0 || self.validation_size == 0 {
            return Err(invalid!("batch size, steps per epoch and validation size must be positive"));
        }
        let (lo, hi) = self.ebn0_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid!("Eb/N0 range [{lo}, {hi}] is empty or not finite"));
        }
        if self.eta_schedule.is_empty() {
            return Err(invalid!("eta schedule is empty"));
        }
        for &(f, eta) in &self.eta_schedule {
            if !(0.0..=1.0).contains(&eta) || !(0.0..=1.0).contains(&f) {
                return Err(invalid!("eta schedule entry ({f}, {eta}) outside [0, 1]"));
            }
        }
        if self.eta_schedule.windows(2).any(|w| w[0].0 > w[1].0) {
            return Err(invalid!("eta schedule fractions must be non-decreasing"));
        }
        if self.window == 0 {
            return Err(invalid!("convergence window must be positive"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(invalid!("tolerance must be non-negative"));
        }
        if !(self.cn_weight_decay >= 0.0 && self.cn_weight_decay.is_finite()) {
            return Err(invalid!("CN weight decay must be finite and non-negative"));
        }
        let a = self.adam;
        if !(a.learning_rate > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(invalid!("invalid Adam hyperparameters"));
        }
        Ok(())
    }

    /// Eta in effect during `epoch` (0-based).
    pub fn eta_at(&self, epoch: usize) -> f64 {
        let frac = if self.max_epochs == 0 { 0.0 } else { epoch as f64 / self.max_epochs as f64 };
        let mut eta = self.eta_schedule[0].1;
        for &(f, e) in &self.eta_schedule {
            if f <= frac {
                eta = e;
            }
        }
        eta
    }

    /// Eta used for validation losses: the final schedule value, so that
    /// validation losses are comparable across epochs and pruning cycles.
    pub fn validation_eta(&self) -> f64 {
        self.eta_schedule.last().map(|e| e.1).unwrap_or(0.0)
    }
}

/// One row of a [`LossTrace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub eta: f64,
}

/// Loss history of one training phase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossTrace {
    /// Validation loss of the weights before the first step.
    pub initial_val_loss: f64,
    pub epochs: Vec<EpochLoss>,
    /// Epoch whose weights were returned, `None` if the initial weights won.
    pub best_epoch: Option<usize>,
}

impl LossTrace {
    pub fn best_val_loss(&self) -> f64 {
        match self.best_epoch {
            Some(e) => self.epochs[e].val_loss,
            None => self.initial_val_loss,
        }
    }
}

/// Training failures that carry the loss history up to the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFailure {
    pub error: Error,
    pub trace: Box<LossTrace>,
}

/// Noisy all-zero frame `index` drawn from stream `(seed, tag, batch)`.
fn training_frame(code: &CodeSpec, range: (f64, f64), seed: u64, tag: u64, batch: u64, index: u64) -> LlrFrame {
    let mut r = rng::stream(seed, &[tag, batch, index]);
    let ebn0 = if range.0 == range.1 { range.0 } else { r.random_range(range.0..=range.1) };
    let point = ChannelPoint::new(ebn0, code.rate()).expect("rate is in (0, 1)");
    let zeros = vec![0u8; code.n()];
    awgn_llr(&zeros, &point, &mut r)
}

/// Training batch `batch_index`: all-zero codeword, BPSK, AWGN at an Eb/N0
/// drawn uniformly from the configured range. Frame `i` depends only on
/// `(seed, batch_index, i)`.
pub fn sample_training_batch(config: &TrainConfig, code: &CodeSpec, batch_index: u64) -> Vec<LlrFrame> {
    (0..config.batch_size as u64)
        .map(|i| training_frame(code, config.ebn0_range, config.seed, domain::TRAIN_BATCH, batch_index, i))
        .collect()
}

/// Fixed validation set of a configuration.
pub fn validation_set(config: &TrainConfig, code: &CodeSpec) -> Vec<LlrFrame> {
    (0..config.validation_size as u64)
        .map(|i| training_frame(code, config.ebn0_range, config.seed, domain::VALIDATION, 0, i))
        .collect()
}

/// Mean multiloss of `model` over `frames`.
pub fn evaluate_loss(model: &DecoderModel, frames: &[LlrFrame], eta: f64) -> Result<f64> {
    let n = model.n();
    if let Some(f) = frames.iter().find(|f| f.len() != n) {
        return Err(Error::ShapeMismatch(alloc::format!("frame has length {}, code length is {n}", f.len())));
    }
    let chunks = frames.len().div_ceil(CHUNK);
    let partial = par::map_indexed(chunks, |ci| {
        let mut tape = Tape::default();
        let mut s = 0.0;
        for f in &frames[ci * CHUNK..((ci + 1) * CHUNK).min(frames.len())] {
            model.run_forward(f.values(), &mut tape, false);
            s += soft_ber_multiloss(tape.outputs(), n, eta);
        }
        s
    });
    Ok(partial.iter().sum::<f64>() / frames.len().max(1) as f64)
}

/// Mean multiloss over `frames` and its gradient with respect to every
/// weight slot.
pub fn batch_gradient(model: &DecoderModel, frames: &[LlrFrame], eta: f64) -> Result<(f64, Vec<f64>)> {
    let n = model.n();
    if let Some(f) = frames.iter().find(|f| f.len() != n) {
        return Err(Error::ShapeMismatch(alloc::format!("frame has length {}, code length is {n}", f.len())));
    }
    let len = model.weights().len();
    let scale = 1.0 / frames.len().max(1) as f64;
    let chunks = frames.len().div_ceil(CHUNK);
    let partial = par::map_indexed(chunks, |ci| -> Result<(f64, Vec<f64>)> {
        let mut tape = Tape::recording(model);
        let mut adj = Adjoints::default();
        let mut out_adj = vec![0.0; model.iterations() * n];
        let mut grads = vec![0.0; len];
        let mut loss = 0.0;
        for f in &frames[ci * CHUNK..((ci + 1) * CHUNK).min(frames.len())] {
            model.run_forward(f.values(), &mut tape, true);
            loss += soft_ber_multiloss(tape.outputs(), n, eta);
            multiloss_adjoint(tape.outputs(), n, eta, scale, &mut out_adj);
            backward(model, &tape, &out_adj, &mut grads, &mut adj)?;
        }
        Ok((loss, grads))
    });
    let mut loss = 0.0;
    let mut grads = vec![0.0; len];
    for p in partial {
        let (l, g) = p?;
        loss += l;
        for (a, b) in grads.iter_mut().zip(&g) {
            *a += b;
        }
    }
    Ok((loss * scale, grads))
}

/// Trains until the validation loss stops improving or `max_epochs` is
/// reached, and returns the weights with the best validation loss.
pub fn train_until_converged(model: &DecoderModel, config: &TrainConfig) -> core::result::Result<(DecoderModel, LossTrace), TrainFailure> {
    train_phase(model, config, 0)
}

/// Like [`train_until_converged`]; `phase` selects an independent family of
/// training batches (the validation set stays the same).
pub fn train_phase(model: &DecoderModel, config: &TrainConfig, phase: u64) -> core::result::Result<(DecoderModel, LossTrace), TrainFailure> {
    let fail = |error: Error, trace: &LossTrace| TrainFailure { error, trace: Box::new(trace.clone()) };
    let mut trace = LossTrace::default();
    config.validate().map_err(|e| fail(e, &trace))?;
    if !model.mode().trainable() {
        return Err(fail(invalid!("a {} model has no trainable weights", model.mode().as_str()), &trace));
    }
    let val = validation_set(config, model.code());
    let val_eta = config.validation_eta();
    let mut current = model.clone();
    let mut best = model.clone();
    trace.initial_val_loss = evaluate_loss(&current, &val, val_eta).map_err(|e| fail(e, &trace))?;
    if !trace.initial_val_loss.is_finite() {
        return Err(fail(Error::Diverged { epoch: 0 }, &trace));
    }
    let mut best_loss = trace.initial_val_loss;
    // best validation loss after each epoch, for the window rule
    let mut history = vec![best_loss];
    let mut adam = AdamState::new(current.weights().len(), config.adam);
    let mut weights = current.weights().clone();

    for epoch in 0..config.max_epochs {
        let eta = config.eta_at(epoch);
        let mut train_loss = 0.0;
        for step in 0..config.steps_per_epoch {
            let batch_index = (phase << 32) | (epoch * config.steps_per_epoch + step) as u64;
            let frames = sample_training_batch(config, current.code(), batch_index);
            let (l, g) = batch_gradient(&current, &frames, eta).map_err(|e| fail(e, &trace))?;
            train_loss += l;
            adam_step(&mut weights, &g, &mut adam).map_err(|e| fail(e, &trace))?;
            if config.cn_weight_decay > 0.0 {
                weights.decay_checks(1.0 - config.adam.learning_rate * config.cn_weight_decay);
            }
            current.set_weight_values(weights.values()).map_err(|e| fail(e, &trace))?;
        }
        train_loss /= config.steps_per_epoch as f64;
        let val_loss = evaluate_loss(&current, &val, val_eta).map_err(|e| fail(e, &trace))?;
        trace.epochs.push(EpochLoss { epoch, train_loss, val_loss, eta });
        if !val_loss.is_finite() || !train_loss.is_finite() {
            return Err(fail(Error::Diverged { epoch }, &trace));
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            best = current.clone();
            trace.best_epoch = Some(epoch);
        }
        history.push(best_loss);
        log::debug!("epoch {epoch}: eta {eta} train {train_loss:.6e} val {val_loss:.6e}");
        if history.len() > config.window {
            let old = history[history.len() - 1 - config.window];
            if old - best_loss <= config.tolerance * old.abs() {
                break;
            }
        }
    }
    Ok((best, trace))
}
