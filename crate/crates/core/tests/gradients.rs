mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use wbp_core::codes::CodeSpec;
use wbp_core::decoder::{DecoderModel, LlrFrame, Tape, WeightMode};
use wbp_core::gf2::BinaryMatrix;
use wbp_core::training::{backward, batch_gradient, evaluate_loss, Adjoints};

fn fd_check(model: &DecoderModel, frames: &[LlrFrame], eta: f64) -> Result<(), String> {
    let (_, grads) = batch_gradient(model, frames, eta).unwrap();
    let base = model.weights().values().to_vec();
    let h = 1e-4;
    for i in 0..base.len() {
        let mut m = model.clone();
        let mut w = base.clone();
        w[i] = base[i] + h;
        m.set_weight_values(&w).unwrap();
        let up = evaluate_loss(&m, frames, eta).unwrap();
        w[i] = base[i] - h;
        m.set_weight_values(&w).unwrap();
        let down = evaluate_loss(&m, frames, eta).unwrap();
        let fd = (up - down) / (2.0 * h);
        if (grads[i] - fd).abs() > 1e-6 + 1e-4 * fd.abs() {
            return Err(format!("{}: analytic {} vs finite difference {}", model.weights().describe_slot(i), grads[i], fd));
        }
    }
    Ok(())
}

#[test]
fn degree_two_check_by_hand() {
    // H = [1 1], one iteration; the CN passes the other message through, so
    // out_0 = a_0 ch_0 + b_0 w (w_1 ch_1)
    let h = BinaryMatrix::from_dense(1, 2, &[1, 1]).unwrap();
    let code = CodeSpec::new(2, 1, "rep2").unwrap();
    let mut m = DecoderModel::repeated(code, h.clone(), &h, 1, WeightMode::CnTied).unwrap();
    let lay = m.weights().iteration(0).clone();
    let mut w = m.weights().values().to_vec();
    let (w1, wc, a0, b0) = (0.8, 0.6, 1.3, 0.7);
    w[lay.channel.start + 1] = w1;
    w[lay.check.start] = wc;
    w[lay.marg_channel.start] = a0;
    w[lay.marg_sum.start] = b0;
    m.set_weight_values(&w).unwrap();
    let (ch0, ch1) = (0.4, 1.1);
    let f = frame(&[ch0, ch1]);
    let mut tape = Tape::recording(&m);
    m.forward_recorded(&f, &mut tape).unwrap();
    let mut grads = vec![0.0; m.weights().len()];
    backward(&m, &tape, &[1.0, 0.0], &mut grads, &mut Adjoints::default()).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    assert!(close(grads[lay.check.start], b0 * w1 * ch1));
    assert!(close(grads[lay.marg_sum.start], wc * w1 * ch1));
    assert!(close(grads[lay.marg_channel.start], ch0));
    assert!(close(grads[lay.channel.start + 1], b0 * wc * ch1));
    assert_eq!(grads[lay.channel.start], 0.0);
    assert_eq!(grads[lay.marg_channel.start + 1], 0.0);
}

#[test]
fn eta_zero_ignores_early_marginalization() {
    let mut r = rng(21);
    let model = random_model(&mut r, 10, 3, WeightMode::CnTied, 0.5, 1.5);
    let frames: Vec<LlrFrame> = (0..4).map(|_| random_frame(&mut r, 10, 1.0, 2.0)).collect();
    let (_, g) = batch_gradient(&model, &frames, 0.0).unwrap();
    for l in 0..2 {
        let lay = model.weights().iteration(l);
        assert!(g[lay.marg_channel.clone()].iter().all(|&x| x == 0.0));
        assert!(g[lay.marg_sum.clone()].iter().all(|&x| x == 0.0));
    }
    let last = model.weights().iteration(2);
    assert!(g[last.marg_channel.clone()].iter().any(|&x| x != 0.0));
}

#[test]
fn pruned_slots_disappear() {
    let mut r = rng(22);
    let mut model = random_model(&mut r, 8, 2, WeightMode::CnTied, 0.5, 1.5);
    let before = model.weights().len();
    let deg = model.schedule()[1].graph().cn_degree(0);
    model.prune_cn(1, 0).unwrap();
    assert_eq!(model.weights().len(), before - deg - 1);
    let frames = vec![random_frame(&mut r, 8, 1.0, 2.0)];
    let (_, g) = batch_gradient(&model, &frames, 0.5).unwrap();
    assert_eq!(g.len(), model.weights().len());
    fd_check(&model, &frames, 0.5).unwrap();
}

#[test]
fn fifty_random_instances() {
    let mut r = rng(23);
    for case in 0..60 {
        let n = r.random_range(4..=16);
        let iters = r.random_range(1..=3);
        let mode = if case % 2 == 0 { WeightMode::CnTied } else { WeightMode::Untied };
        let model = random_model(&mut r, n, iters, mode, 0.5, 1.5);
        let frames: Vec<LlrFrame> = (0..3).map(|_| random_frame(&mut r, n, 1.0, 2.5)).collect();
        let eta = [0.0, 0.5, 1.0][case % 3];
        if let Err(e) = fd_check(&model, &frames, eta) {
            panic!("case {case} (n={n}, L={iters}, {mode:?}): {e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), n in 4usize..=16, iters in 1usize..=3, untied in any::<bool>()) {
        let mut r = rng(seed);
        let mode = if untied { WeightMode::Untied } else { WeightMode::CnTied };
        let model = random_model(&mut r, n, iters, mode, 0.5, 1.5);
        let frames: Vec<LlrFrame> = (0..2).map(|_| random_frame(&mut r, n, 1.0, 2.5)).collect();
        prop_assert!(fd_check(&model, &frames, 0.7).is_ok());
    }
}
