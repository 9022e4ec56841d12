use std::time::Instant;

use wbp_core::codes::{self, LowWeightSearch};
use wbp_core::gf2::BinaryMatrix;
use wbp_core::tanner::TannerGraph;

// q-binomial coefficient for q = 2 by the product formula, kept separate
// from the library's implementation
fn gauss2(n: u32, k: u32) -> u128 {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (1u128 << (n - i)) - 1;
        den *= (1u128 << (i + 1)) - 1;
    }
    num / den
}

#[test]
fn min_weight_counts_up_to_m7() {
    for m in 1..=7usize {
        for r in 0..m {
            let h = codes::rm_min_weight_checks(r, m).unwrap();
            let expected = (1u128 << (m - r - 1)) * gauss2(m as u32, r as u32 + 1);
            assert_eq!(h.rows() as u128, expected, "RM({r},{m})");
            assert_eq!(codes::rm_min_weight_count(r, m), expected);
            assert!(h.row_weights().iter().all(|&w| w == 1 << (r + 1)));
            assert!(!h.has_duplicate_rows());
            let g = codes::rm_generator(r, m).unwrap();
            assert!(h.is_orthogonal_to(&g), "RM({r},{m})");
            assert_eq!(h.rank(), (1 << m) - g.rank(), "RM({r},{m}) checks span the dual");
        }
    }
}

#[test]
fn full_size_constructions() {
    let t = Instant::now();
    let h = codes::rm_min_weight_checks(2, 5).unwrap();
    assert_eq!((h.rows(), h.cols()), (620, 32));
    assert_eq!(h.rank(), 16);
    let h = codes::rm_min_weight_checks(3, 7).unwrap();
    assert_eq!((h.rows(), h.cols()), (94488, 128));
    assert!(h.row_weights().iter().all(|&w| w == 16));
    assert!(h.is_orthogonal_to(&codes::rm_generator(3, 7).unwrap()));
    assert!(!h.has_duplicate_rows());
    assert!(t.elapsed().as_secs() < 60);
}

#[test]
fn rm13_has_fourteen_weight_four_checks() {
    // dual of RM(1,3) is RM(1,3); count weight-4 words by enumeration
    let g = codes::rm_generator(1, 3).unwrap();
    let weights: Vec<usize> = codes::enumerate_codewords(&g).unwrap().map(|w| w.weight()).collect();
    assert_eq!(weights.len(), 16);
    assert_eq!(weights.iter().filter(|&&w| w == 4).count(), 14);
    assert_eq!(weights.iter().filter(|&&w| w == 0).count(), 1);
    assert_eq!(weights.iter().filter(|&&w| w == 8).count(), 1);
    assert_eq!(codes::rm_min_weight_checks(1, 3).unwrap().rows(), 14);
}

#[test]
fn generator_ranks() {
    let g = codes::rm_generator(0, 3).unwrap();
    assert_eq!(g.to_dense(), vec![vec![1u8; 8]]);
    assert_eq!(codes::rm_generator(1, 3).unwrap().rank(), 4);
    assert_eq!(codes::rm_generator(2, 5).unwrap().rank(), 16);
    assert!(codes::rm_generator(4, 3).is_err());
    assert!(codes::rm_min_weight_checks(3, 3).is_err());
    assert!(codes::rm_min_weight_checks(2, 11).is_err());
}

#[test]
fn small_code_enumeration() {
    let spc = codes::single_parity_check(3).nullspace();
    let mut words: Vec<Vec<u8>> = codes::enumerate_codewords(&spc).unwrap().map(|w| w.to_bits()).collect();
    words.sort();
    assert_eq!(words, vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
    let rep: Vec<Vec<u8>> = codes::enumerate_codewords(&codes::rm_generator(0, 3).unwrap()).unwrap().map(|w| w.to_bits()).collect();
    assert_eq!(rep, vec![vec![0; 8], vec![1; 8]]);
}

#[test]
fn ccsds_structure() {
    let h = codes::ccsds_tc128_parity_check();
    assert_eq!((h.rows(), h.cols()), (64, 128));
    assert!(h.row_weights().iter().all(|&w| w == 8));
    let cw = h.column_weights();
    assert_eq!(cw.iter().filter(|&&w| w == 3).count(), 64);
    assert_eq!(cw.iter().filter(|&&w| w == 5).count(), 64);
    assert_eq!(h.rank(), 64);
    let g = TannerGraph::build(&h).unwrap();
    assert_eq!(g.edge_count(), 512);
    assert_eq!(g.to_matrix(), h);
}

#[test]
fn ccsds_random_overcomplete() {
    let h = codes::ccsds_tc128_parity_check();
    let g = h.nullspace();
    assert_eq!(g.rows(), 64);
    let search = LowWeightSearch::default();
    let oc = codes::random_low_weight_checks(&h, 1000, 16, 7, &search).unwrap();
    assert_eq!((oc.rows(), oc.cols()), (1000, 128));
    assert!(oc.row_weights().iter().all(|&w| w > 0 && w <= 16));
    assert!(!oc.has_duplicate_rows());
    assert!(oc.is_orthogonal_to(&g));
    let again = codes::random_low_weight_checks(&h, 1000, 16, 7, &search).unwrap();
    assert_eq!(oc, again);
}

#[test]
fn unreachable_count_is_search_exhausted() {
    // sums of at most four rows give only a few thousand checks of weight <= 16
    let h = codes::ccsds_tc128_parity_check();
    let search = LowWeightSearch { max_combine: 4, attempt_budget: Some(200_000) };
    let err = codes::random_low_weight_checks(&h, 10_000, 16, 7, &search).unwrap_err();
    assert!(matches!(err, wbp_core::Error::SearchExhausted(_)), "{err}");
}

#[test]
fn single_row_base() {
    let base = BinaryMatrix::from_supports(10, [vec![0usize, 1, 2, 3, 4, 5, 6, 7]]).unwrap();
    let out = codes::random_low_weight_checks(&base, 1, 8, 3, &LowWeightSearch::default()).unwrap();
    assert_eq!(out, base);
    let err = codes::random_low_weight_checks(&base, 2, 8, 3, &LowWeightSearch { max_combine: 4, attempt_budget: Some(1000) });
    assert!(err.is_err());
}

#[test]
fn subsample_is_deterministic_subset() {
    let h = codes::rm_min_weight_checks(2, 6).unwrap();
    let a = codes::subsample_rows(&h, 500, 1).unwrap();
    let b = codes::subsample_rows(&h, 500, 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows(), 500);
    assert!(!a.has_duplicate_rows());
    assert!(a.is_orthogonal_to(&codes::rm_generator(2, 6).unwrap()));
    assert!(codes::subsample_rows(&h, h.rows() + 1, 1).is_err());
}

#[test]
fn tanner_read_off() {
    let h = BinaryMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
    let g = TannerGraph::build(&h).unwrap();
    assert_eq!(g.cn_neighbors(0), &[0, 1]);
    assert_eq!(g.cn_neighbors(1), &[1, 2]);
    assert_eq!(g.vn_neighbors(1), vec![0, 1]);
    assert_eq!(g.edge_count(), 4);
    let rm = codes::rm_min_weight_checks(2, 5).unwrap();
    assert_eq!(TannerGraph::build(&rm).unwrap().edge_count(), 4960);
    assert!(TannerGraph::build(&BinaryMatrix::from_dense(2, 3, &[1, 1, 0, 0, 0, 0]).unwrap()).is_err());
}
