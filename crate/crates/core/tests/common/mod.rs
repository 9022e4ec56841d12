#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wbp_core::codes::CodeSpec;
use wbp_core::decoder::{DecoderModel, LlrFrame, WeightMode};
use wbp_core::gf2::BinaryMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn frame(v: &[f64]) -> LlrFrame {
    LlrFrame::new(v.to_vec()).unwrap()
}

pub fn random_frame(r: &mut ChaCha8Rng, n: usize, mean: f64, spread: f64) -> LlrFrame {
    frame(&(0..n).map(|_| mean + spread * (2.0 * r.random::<f64>() - 1.0)).collect::<Vec<_>>())
}

/// Random parity-check matrix without zero rows or zero columns.
pub fn random_h(r: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> BinaryMatrix {
    let mut d = vec![0u8; m * n];
    for x in d.iter_mut() {
        *x = (r.random::<f64>() < density) as u8;
    }
    for c in 0..m {
        if d[c * n..(c + 1) * n].iter().all(|&b| b == 0) {
            d[c * n + r.random_range(0..n)] = 1;
        }
    }
    for v in 0..n {
        if (0..m).all(|c| d[c * n + v] == 0) {
            d[r.random_range(0..m) * n + v] = 1;
        }
    }
    BinaryMatrix::from_dense(m, n, &d).unwrap()
}

/// Random matrix whose rows all have even weight (at least two).
pub fn random_even_h(r: &mut ChaCha8Rng, m: usize, n: usize) -> BinaryMatrix {
    let rows: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let w = 2 * r.random_range(1..=n / 2);
            rand::seq::index::sample(r, n, w).into_vec()
        })
        .collect();
    BinaryMatrix::from_supports(n, rows).unwrap()
}

/// Random trainable model with weights in [lo, hi].
pub fn random_model(r: &mut ChaCha8Rng, n: usize, iters: usize, mode: WeightMode, lo: f64, hi: f64) -> DecoderModel {
    let m = r.random_range(2..=n.min(8));
    let schedule: Vec<BinaryMatrix> = (0..iters).map(|_| random_h(r, m, n, 0.4)).collect();
    model_with(r, schedule, mode, lo, hi)
}

/// Random model whose check nodes all have even degree.
pub fn random_even_model(r: &mut ChaCha8Rng, n: usize, iters: usize, mode: WeightMode, lo: f64, hi: f64) -> DecoderModel {
    let m = r.random_range(2..=n.min(8));
    let schedule: Vec<BinaryMatrix> = (0..iters).map(|_| random_even_h(r, m, n)).collect();
    model_with(r, schedule, mode, lo, hi)
}

fn model_with(r: &mut ChaCha8Rng, schedule: Vec<BinaryMatrix>, mode: WeightMode, lo: f64, hi: f64) -> DecoderModel {
    let n = schedule[0].cols();
    let code = CodeSpec::new(n, n - 1, "random").unwrap();
    let reference = schedule[0].clone();
    let mut model = DecoderModel::new(code, reference, schedule, mode).unwrap();
    let w: Vec<f64> = (0..model.weights().len()).map(|_| r.random_range(lo..=hi)).collect();
    model.set_weight_values(&w).unwrap();
    model
}

/// Conventional sum-product decoding written directly against the dense
/// matrix, with message tables indexed by (check, variable). Returns the
/// VN-to-CN messages, CN-to-VN messages and output LLRs of every iteration.
pub struct TextbookTrace {
    pub vn: Vec<Vec<Vec<f64>>>,
    pub cn: Vec<Vec<Vec<f64>>>,
    pub out: Vec<Vec<f64>>,
}

pub fn textbook_bp(h: &[Vec<u8>], ch: &[f64], iterations: usize, clamp: f64, eps: f64) -> TextbookTrace {
    let m = h.len();
    let n = ch.len();
    let clip = |x: f64| x.max(-clamp).min(clamp);
    let mut c2v = vec![vec![0.0; n]; m];
    let mut trace = TextbookTrace { vn: vec![], cn: vec![], out: vec![] };
    for it in 0..iterations {
        // incoming totals of the previous iteration, checks in ascending order
        let mut total = vec![0.0; n];
        for v in 0..n {
            for c in 0..m {
                if h[c][v] == 1 {
                    total[v] += c2v[c][v];
                }
            }
        }
        let mut v2c = vec![vec![0.0; n]; m];
        for c in 0..m {
            for v in 0..n {
                if h[c][v] == 1 {
                    let ext = if it == 0 { 0.0 } else { total[v] - c2v[c][v] };
                    v2c[c][v] = clip(1.0 * ch[v] + 1.0 * ext);
                }
            }
        }
        let mut next = vec![vec![0.0; n]; m];
        for c in 0..m {
            let vars: Vec<usize> = (0..n).filter(|&v| h[c][v] == 1).collect();
            let t: Vec<f64> = vars.iter().map(|&v| (0.5 * v2c[c][v]).tanh()).collect();
            let d = vars.len();
            let mut before = vec![1.0; d];
            for j in 1..d {
                before[j] = before[j - 1] * t[j - 1];
            }
            let mut after = 1.0;
            for j in (0..d).rev() {
                let a = (before[j] * after).max(-(1.0 - eps)).min(1.0 - eps);
                after *= t[j];
                next[c][vars[j]] = clip(1.0 * (2.0 * a.abs().atanh().copysign(a))) + 0.0;
            }
        }
        c2v = next;
        let mut out = vec![0.0; n];
        for v in 0..n {
            let mut s = 0.0;
            for c in 0..m {
                if h[c][v] == 1 {
                    s += c2v[c][v];
                }
            }
            out[v] = clip(1.0 * ch[v] + 1.0 * s);
        }
        trace.vn.push(v2c);
        trace.cn.push(c2v.clone());
        trace.out.push(out);
    }
    trace
}
