use alloc::vec;
use alloc::vec::Vec;

use crate::decoder::WeightSet;
use crate::{math, Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Moment estimates of Adam, shaped like the weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState { config, first: vec![0.0; len], second: vec![0.0; len], step: 0 }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    /// Bias-corrected Adam update of `weights` in place.
    pub fn apply(&mut self, weights: &mut [f64], grads: &[f64]) -> Result<()> {
        if weights.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "optimizer holds {} slots, got {} weights and {} gradients",
                self.first.len(),
                weights.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { slot: alloc::format!("slot {i}") });
        }
        self.step += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let c1 = 1.0 - math::powi(beta1, self.step as i32);
        let c2 = 1.0 - math::powi(beta2, self.step as i32);
        for i in 0..weights.len() {
            let g = grads[i];
            self.first[i] = beta1 * self.first[i] + (1.0 - beta1) * g;
            self.second[i] = beta2 * self.second[i] + (1.0 - beta2) * g * g;
            let m_hat = self.first[i] / c1;
            let v_hat = self.second[i] / c2;
            weights[i] -= learning_rate * m_hat / (math::sqrt(v_hat) + epsilon);
        }
        Ok(())
    }
}

/// Adam step on a weight set; a non-finite gradient aborts and names the slot.
pub fn adam_step(weights: &mut WeightSet, grads: &[f64], state: &mut AdamState) -> Result<()> {
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { slot: weights.describe_slot(i) });
    }
    state.apply(weights.values_mut(), grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut w = [1.0, -2.0, 0.5];
        s.apply(&mut w, &[0.0; 3]).unwrap();
        assert_eq!(w, [1.0, -2.0, 0.5]);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn first_step_magnitude() {
        let mut s = AdamState::new(1, AdamConfig::default());
        let mut w = [0.0];
        s.apply(&mut w, &[1.0]).unwrap();
        assert!((w[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-18);
    }

    #[test]
    fn non_finite_rejected() {
        let mut s = AdamState::new(2, AdamConfig::default());
        let mut w = [0.0, 0.0];
        assert!(matches!(s.apply(&mut w, &[0.0, f64::NAN]), Err(Error::NonFiniteGradient { .. })));
        assert!(s.apply(&mut w, &[0.0]).is_err());
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut s = AdamState::new(2, AdamConfig::default());
            let mut w = [0.3, 0.7];
            for k in 0..50 {
                let g = [(k as f64).sin(), w[0] - w[1]];
                s.apply(&mut w, &g).unwrap();
            }
            w
        };
        assert_eq!(run(), run());
    }
}
