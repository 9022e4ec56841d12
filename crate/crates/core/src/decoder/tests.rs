use super::*;
use crate::codes::{self, CodeSpec};

fn spc3() -> (CodeSpec, BinaryMatrix) {
    (CodeSpec::new(3, 2, "spc3").unwrap(), codes::single_parity_check(3))
}

fn frame(v: &[f64]) -> LlrFrame {
    LlrFrame::new(v.to_vec()).unwrap()
}

// two checks on variable 0: c0 = {0,1}, c1 = {0,2}
fn star() -> DecoderModel {
    let h = BinaryMatrix::from_dense(2, 3, &[1, 1, 0, 1, 0, 1]).unwrap();
    let code = CodeSpec::new(3, 1, "rep3").unwrap();
    DecoderModel::repeated(code, h.clone(), &h, 2, WeightMode::CnTied).unwrap()
}

#[test]
fn vn_update_excludes_target() {
    let m = star();
    // iteration-1 CN messages: c0->v0 = 0.5, c0->v1 = 0, c1->v0 = -0.25, c1->v2 = 0
    // edges row-major: (c0,v0)=0 (c0,v1)=1 (c1,v0)=2 (c1,v2)=3
    let prev = [0.5, 0.0, -0.25, 0.0];
    let out = m.vn_update(1, &frame(&[1.0, 0.0, 0.0]), &prev).unwrap();
    assert_eq!(out[2], 1.5); // v0 -> c1
    assert_eq!(out[0], 0.75); // v0 -> c0
}

#[test]
fn vn_update_first_iteration_is_channel() {
    let m = star();
    let out = m.vn_update(0, &frame(&[1.0, -2.0, 3.0]), &[]).unwrap();
    assert_eq!(out, vec![1.0, -2.0, 1.0, 3.0]);
}

#[test]
fn vn_update_weighted() {
    let mut m = star();
    let lay = m.weights().iteration(1).clone();
    let mut w = m.weights().values().to_vec();
    w[lay.channel.start] = 0.5;
    w[lay.vn_edge.start + 2] = 2.0;
    m.set_weight_values(&w).unwrap();
    let out = m.vn_update(1, &frame(&[1.0, 0.0, 0.0]), &[0.5, 0.0, -0.25, 0.0]).unwrap();
    assert_eq!(out[2], 0.5 * 1.0 + 2.0 * 0.5);
}

#[test]
fn vn_update_shape_mismatch() {
    let m = star();
    assert!(matches!(m.vn_update(1, &frame(&[1.0, 0.0, 0.0]), &[0.0; 3]), Err(Error::ShapeMismatch(_))));
}

#[test]
fn cn_update_degree_two_passes_other_message() {
    let h = BinaryMatrix::from_dense(1, 2, &[1, 1]).unwrap();
    let m = DecoderModel::repeated(CodeSpec::new(2, 1, "rep2").unwrap(), h.clone(), &h, 1, WeightMode::Plain).unwrap();
    let out = m.cn_update(0, &[1.3, -0.7]).unwrap();
    assert!((out[0] + 0.7).abs() < 1e-12);
    assert!((out[1] - 1.3).abs() < 1e-12);
}

#[test]
fn cn_update_degree_three_reference_values() {
    let (code, h) = spc3();
    let mut m = DecoderModel::repeated(code, h.clone(), &h, 1, WeightMode::CnTied).unwrap();
    let out = m.cn_update(0, &[2.0, 2.0, 0.0]).unwrap();
    assert!((out[2] - 1.3250027473578643).abs() < 1e-12);
    m.set_cn_weight(0, 0, 0.5).unwrap();
    let out = m.cn_update(0, &[2.0, 2.0, 0.0]).unwrap();
    assert!((out[2] - 0.6625013736789321).abs() < 1e-12);
}

#[test]
fn marginalize_examples() {
    let m = star();
    let f = frame(&[1.0, 0.0, 0.0]);
    assert_eq!(m.marginalize(0, &f, &[0.0; 4]).unwrap()[0], 1.0);
    assert_eq!(m.marginalize(0, &f, &[0.5, 0.0, -0.25, 0.0]).unwrap()[0], 1.25);
    let mut m = m;
    let lay = m.weights().iteration(0).clone();
    let mut w = m.weights().values().to_vec();
    w[lay.marg_channel.start] = 0.0;
    m.set_weight_values(&w).unwrap();
    assert_eq!(m.marginalize(0, &f, &[0.5, 0.0, -0.25, 0.0]).unwrap()[0], 0.25);
}

#[test]
fn step_functions_compose_to_decode() {
    let h = codes::hamming74_parity_check();
    let code = CodeSpec::new(7, 4, "hamming").unwrap();
    let m = DecoderModel::repeated(code, h.clone(), &h, 3, WeightMode::Plain).unwrap();
    let f = frame(&[0.3, -1.2, 2.2, 0.1, -0.4, 1.7, 0.9]);
    let out = m.decode(&f).unwrap();
    let mut prev: Vec<f64> = Vec::new();
    for l in 0..3 {
        let vn = m.vn_update(l, &f, &prev).unwrap();
        let cn = m.cn_update(l, &vn).unwrap();
        let marg = m.marginalize(l, &f, &cn).unwrap();
        assert_eq!(marg, out.llrs[l]);
        prev = cn;
    }
}

#[test]
fn all_zero_frame_stays_zero() {
    let h = codes::rm_min_weight_checks(1, 3).unwrap();
    let code = CodeSpec::reed_muller(1, 3).unwrap();
    let m = DecoderModel::repeated(code, h.clone(), &h, 3, WeightMode::CnTied).unwrap();
    let out = m.decode(&frame(&[0.0; 8])).unwrap();
    for l in &out.llrs {
        assert!(l.iter().all(|&x| x == 0.0));
    }
    assert_eq!(out.hard_decision, vec![0; 8]);
}

#[test]
fn noiseless_all_zero_word() {
    let h = codes::rm_min_weight_checks(1, 3).unwrap();
    let code = CodeSpec::reed_muller(1, 3).unwrap();
    let m = DecoderModel::repeated(code, h.clone(), &h, 4, WeightMode::Plain).unwrap();
    let out = m.decode(&frame(&[10.0; 8])).unwrap();
    assert_eq!(out.hard_decision, vec![0; 8]);
    assert!(out.syndrome_ok.iter().all(|&s| s));
    for l in &out.llrs {
        assert!(l.iter().all(|&x| x.abs() <= m.clamp()));
    }
}

#[test]
fn frame_length_checked() {
    let (code, h) = spc3();
    let m = DecoderModel::repeated(code, h.clone(), &h, 1, WeightMode::Plain).unwrap();
    assert!(m.decode(&frame(&[1.0, 2.0])).is_err());
}

#[test]
fn eval_count_and_fractions() {
    let h = codes::rm_min_weight_checks(1, 3).unwrap();
    let code = CodeSpec::reed_muller(1, 3).unwrap();
    let mut m = DecoderModel::repeated(code, h.clone(), &h, 4, WeightMode::CnTied).unwrap();
    assert_eq!(m.cn_eval_count(), 56);
    assert_eq!(m.cn_fraction_per_iteration().unwrap(), vec![0.25; 4]);
    m.prune_cn(2, 5).unwrap();
    assert_eq!(m.cn_eval_count(), 55);
    let f = m.cn_fraction_per_iteration().unwrap();
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn fraction_direct_ratio() {
    let h = BinaryMatrix::from_dense(3, 3, &[1, 1, 0, 0, 1, 1, 1, 0, 1]).unwrap();
    let one = h.select_rows(&[0]);
    let empty = h.select_rows(&[]);
    let code = CodeSpec::new(3, 1, "t").unwrap();
    let m = DecoderModel::with_weights(
        code.clone(),
        h.clone(),
        vec![h.clone(), one.clone(), empty.clone(), empty.clone()],
        WeightMode::Plain,
        {
            let graphs: Vec<TannerGraph> = [&h, &one, &empty, &empty].iter().map(|x| TannerGraph::build_allow_empty(x).unwrap()).collect();
            let refs: Vec<&TannerGraph> = graphs.iter().collect();
            vec![1.0; WeightSet::layout_for(WeightMode::Plain, 3, &refs).1]
        },
        true,
    )
    .unwrap();
    assert_eq!(m.cn_fraction_per_iteration().unwrap(), vec![0.75, 0.25, 0.0, 0.0]);
}

#[test]
fn pruning_last_cn_needs_flag() {
    let (code, h) = spc3();
    let mut m = DecoderModel::repeated(code, h.clone(), &h, 2, WeightMode::CnTied).unwrap();
    assert!(matches!(m.prune_cn(0, 0), Err(Error::EmptyIteration { iteration: 1 })));
    m.set_allow_empty_iterations(true);
    m.prune_cn(0, 0).unwrap();
    m.prune_cn(1, 0).unwrap();
    let f = frame(&[0.5, -1.0, 2.0]);
    let out = m.decode(&f).unwrap();
    for l in &out.llrs {
        assert_eq!(l.as_slice(), f.values());
    }
    assert!(m.cn_fraction_per_iteration().is_err());
}

#[test]
fn prune_matches_zero_weight_small() {
    let h = codes::rm_min_weight_checks(1, 3).unwrap();
    let code = CodeSpec::reed_muller(1, 3).unwrap();
    let mut zero = DecoderModel::repeated(code, h.clone(), &h, 3, WeightMode::CnTied).unwrap();
    let mut pruned = zero.clone();
    zero.set_cn_weight(1, 4, 0.0).unwrap();
    pruned.prune_cn(1, 4).unwrap();
    let f = frame(&[0.9, -0.3, 1.4, 0.2, -1.1, 0.6, 2.0, -0.05]);
    assert_eq!(zero.decode(&f).unwrap(), pruned.decode(&f).unwrap());
}

#[test]
fn untied_conversion_preserves_outputs() {
    let h = codes::hamming74_parity_check();
    let code = CodeSpec::new(7, 4, "hamming").unwrap();
    let mut m = DecoderModel::repeated(code, h.clone(), &h, 2, WeightMode::CnTied).unwrap();
    m.set_cn_weight(0, 1, 0.7).unwrap();
    m.set_cn_weight(1, 2, -0.4).unwrap();
    let u = m.to_untied().unwrap();
    assert_eq!(u.mode(), WeightMode::Untied);
    let f = frame(&[0.3, -1.2, 2.2, 0.1, -0.4, 1.7, 0.9]);
    assert_eq!(m.decode(&f).unwrap(), u.decode(&f).unwrap());
    assert!(u.cn_weight(0, 0).is_err());
}

#[test]
fn plain_rejects_non_unit_weights() {
    let (code, h) = spc3();
    let mut m = DecoderModel::repeated(code, h.clone(), &h, 1, WeightMode::Plain).unwrap();
    let mut w = m.weights().values().to_vec();
    w[0] = 0.5;
    assert!(m.set_weight_values(&w).is_err());
    assert!(m.set_cn_weight(0, 0, 0.5).is_err());
}

#[test]
fn slot_names() {
    let m = star();
    assert_eq!(m.weights().describe_slot(0), "iteration 1 channel weight of VN 0");
    let lay = m.weights().iteration(1);
    assert_eq!(m.weights().describe_slot(lay.check.start + 1), "iteration 2 check weight of CN 1");
}
