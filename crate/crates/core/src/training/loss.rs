use alloc::vec::Vec;

use crate::math;

/// Per-iteration loss coefficients `eta^(L-l) / sum_j eta^(L-j)`, with
/// `eta^0 = 1` also for `eta = 0`.
pub fn multiloss_coefficients(iterations: usize, eta: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..iterations).map(|l| math::powi(eta, (iterations - 1 - l) as i32)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|c| c / z).collect()
}

/// Soft bit-error-rate multiloss of one frame under the all-zero codeword.
///
/// `outputs` holds the output LLRs of all iterations, iteration-major, `n`
/// per iteration. Each output contributes its probability of being a one,
/// `1 / (1 + e^llr)`.
pub fn soft_ber_multiloss(outputs: &[f64], n: usize, eta: f64) -> f64 {
    assert!(n > 0 && outputs.len() % n == 0, "outputs must hold whole iterations");
    let iters = outputs.len() / n;
    let mut total = 0.0;
    let mut z = 0.0;
    for l in 0..iters {
        let c = math::powi(eta, (iters - 1 - l) as i32);
        z += c;
        if c == 0.0 {
            continue;
        }
        let s: f64 = outputs[l * n..(l + 1) * n].iter().map(|&x| math::prob_one(x)).sum();
        total += c * (s / n as f64);
    }
    total / z
}

/// Batch average of [`soft_ber_multiloss`].
pub fn batch_multiloss<'a, I>(frames: I, n: usize, eta: f64) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for o in frames {
        total += soft_ber_multiloss(o, n, eta);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Adjoint of the multiloss with respect to every output LLR, scaled by
/// `scale` (for example `1 / batch_size`). Writes into `adjoint`, which has
/// the shape of `outputs`.
pub fn multiloss_adjoint(outputs: &[f64], n: usize, eta: f64, scale: f64, adjoint: &mut [f64]) {
    let coef = multiloss_coefficients(outputs.len() / n, eta);
    for (l, &c) in coef.iter().enumerate() {
        let k = scale * c / n as f64;
        for v in l * n..(l + 1) * n {
            let o = math::prob_one(outputs[v]);
            adjoint[v] = -k * o * (1.0 - o);
        }
    }
}
