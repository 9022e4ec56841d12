//! Code constructions: Reed-Muller generators and minimum-weight parity
//! checks, randomized low-weight check sets, a few small reference codes and
//! the CCSDS (128,64) telecommand LDPC code.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::invalid;
use crate::gf2::{BinaryMatrix, BitVec};
use crate::rng;
use crate::{Error, Result};

/// Largest `m` accepted by the Reed-Muller constructions.
pub const RM_MAX_M: usize = 10;

/// Largest code dimension accepted by exhaustive codeword enumeration.
pub const ENUMERATION_MAX_K: usize = 24;

/// Length, dimension and a label for a linear block code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    n: usize,
    k: usize,
    name: String,
}

impl CodeSpec {
    pub fn new(n: usize, k: usize, name: impl Into<String>) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(invalid!("code dimension must satisfy 0 < k < n (n={n}, k={k})"));
        }
        Ok(CodeSpec { n, k, name: name.into() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Spec of the Reed-Muller code RM(r, m).
    pub fn reed_muller(r: usize, m: usize) -> Result<Self> {
        if r >= m {
            return Err(invalid!("RM(r,m) requires r < m, got r={r}, m={m}"));
        }
        let k = (0..=r).map(|i| binomial(m, i)).sum();
        Self::new(1 << m, k, alloc::format!("RM({r},{m})"))
    }
}

/// Binomial coefficient.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Gaussian binomial coefficient `[n choose k]_2`: the number of
/// `k`-dimensional subspaces of GF(2)^n.
pub fn gaussian_binomial2(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (1u128 << (n - i)) - 1;
        den *= (1u128 << (i + 1)) - 1;
    }
    num / den
}

fn check_rm_params(r: usize, m: usize, allow_r_eq_m: bool) -> Result<()> {
    if m > RM_MAX_M {
        return Err(Error::ResourceGuard(alloc::format!(
            "Reed-Muller construction limited to m <= {RM_MAX_M}, got m={m}"
        )));
    }
    if r > m || (!allow_r_eq_m && r == m) {
        return Err(invalid!("invalid Reed-Muller order r={r} for m={m}"));
    }
    Ok(())
}

/// Generator matrix of RM(r, m): one row per monomial of degree at most `r`,
/// evaluated at every point of GF(2)^m. Point `x` sits in column `x`, with
/// bit `i` of `x` as coordinate `i`. Rows are ordered by degree, then by the
/// lexicographic order of the variable subsets.
pub fn rm_generator(r: usize, m: usize) -> Result<BinaryMatrix> {
    check_rm_params(r, m, true)?;
    let n = 1usize << m;
    let mut rows = Vec::new();
    for degree in 0..=r {
        for subset in subsets(m, degree) {
            let mask: usize = subset.iter().map(|&i| 1 << i).sum();
            rows.push((0..n).filter(|&x| x & mask == mask).collect::<Vec<_>>());
        }
    }
    BinaryMatrix::from_supports(n, rows)
}

// All `k`-subsets of 0..n in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Minimum-weight parity checks of RM(r, m).
///
/// The minimum-weight codewords of the dual code RM(m-r-1, m) are exactly the
/// incidence vectors of the (r+1)-dimensional affine flats of GF(2)^m. Each
/// linear subspace is enumerated once through its reduced row-echelon basis,
/// and each of its cosets once through the representative that vanishes on
/// the pivot coordinates.
pub fn rm_min_weight_checks(r: usize, m: usize) -> Result<BinaryMatrix> {
    check_rm_params(r, m, false)?;
    let n = 1usize << m;
    let d = r + 1;
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for pivots in subsets(m, d) {
        let pivot_mask: usize = pivots.iter().map(|&p| 1 << p).sum();
        // Free positions of basis row j: non-pivot coordinates above its pivot.
        let free: Vec<Vec<usize>> = pivots
            .iter()
            .map(|&p| (p + 1..m).filter(|c| pivot_mask >> c & 1 == 0).collect())
            .collect();
        let total_free: usize = free.iter().map(Vec::len).sum();
        for fill in 0..1usize << total_free {
            let mut basis = Vec::with_capacity(d);
            let mut bit = 0;
            for (j, &p) in pivots.iter().enumerate() {
                let mut v = 1usize << p;
                for &c in &free[j] {
                    if fill >> bit & 1 == 1 {
                        v |= 1 << c;
                    }
                    bit += 1;
                }
                basis.push(v);
            }
            let span: Vec<usize> = (0..1usize << d)
                .map(|coef| {
                    basis
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| coef >> i & 1 == 1)
                        .fold(0, |acc, (_, &b)| acc ^ b)
                })
                .collect();
            // Coset representatives: vectors vanishing on the pivots.
            for rep in (0..n).filter(|x| x & pivot_mask == 0) {
                let mut pts: Vec<usize> = span.iter().map(|s| s ^ rep).collect();
                pts.sort_unstable();
                rows.push(pts);
            }
        }
    }
    BinaryMatrix::from_supports(n, rows)
}

/// Expected number of minimum-weight checks of RM(r, m):
/// `2^(m-r-1) * [m choose r+1]_2`.
pub fn rm_min_weight_count(r: usize, m: usize) -> u128 {
    (1u128 << (m - r - 1)) * gaussian_binomial2(m, r + 1)
}

/// Options for [`random_low_weight_checks`].
#[derive(Debug, Clone, PartialEq)]
pub struct LowWeightSearch {
    /// Upper bound on the number of base rows summed per candidate.
    pub max_combine: usize,
    /// Candidate budget; `None` means `1000 * target + 10_000`.
    pub attempt_budget: Option<usize>,
}

impl Default for LowWeightSearch {
    fn default() -> Self {
        LowWeightSearch { max_combine: 4, attempt_budget: None }
    }
}

/// Draws `target_count` distinct low-weight parity checks from the row space
/// of `base`.
///
/// Each candidate sums between one and `max_combine` distinct base rows. The
/// first row is uniform; each further row is drawn among the base rows that
/// share a column with the running sum, which keeps the weight low. Zero,
/// overweight and repeated candidates are rejected. Rows are returned in
/// acceptance order; the result depends only on the seed.
pub fn random_low_weight_checks(
    base: &BinaryMatrix,
    target_count: usize,
    weight_cap: usize,
    seed: u64,
    search: &LowWeightSearch,
) -> Result<BinaryMatrix> {
    if base.rows() == 0 {
        return Err(invalid!("base matrix has no rows"));
    }
    if let Some(r) = base.first_zero_row() {
        return Err(invalid!("base row {r} is all-zero"));
    }
    if search.max_combine == 0 {
        return Err(invalid!("max_combine must be at least 1"));
    }
    let min_weight = base.row_weights().into_iter().min().unwrap_or(0);
    if weight_cap < min_weight {
        return Err(invalid!("weight cap {weight_cap} is below the lightest base row ({min_weight})"));
    }
    // rows touching each column
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); base.cols()];
    for (r, c) in base.iter_ones() {
        col_rows[c].push(r);
    }
    let budget = search.attempt_budget.unwrap_or(1000 * target_count + 10_000);
    let mut rng = rng::stream(seed, &[rng::domain::CODE_SEARCH]);
    let mut seen: BTreeSet<BitVec> = BTreeSet::new();
    let mut accepted: Vec<BitVec> = Vec::with_capacity(target_count);
    let max_terms = search.max_combine.min(base.rows());
    let mut used: Vec<usize> = Vec::with_capacity(max_terms);
    for _ in 0..budget {
        if accepted.len() == target_count {
            break;
        }
        let terms = rng.random_range(1..=max_terms);
        used.clear();
        let first = rng.random_range(0..base.rows());
        used.push(first);
        let mut acc = base.row(first);
        while used.len() < terms {
            let support = acc.support();
            let next = if support.is_empty() {
                rng.random_range(0..base.rows())
            } else {
                let col = support[rng.random_range(0..support.len())];
                let cands = &col_rows[col];
                cands[rng.random_range(0..cands.len())]
            };
            if used.contains(&next) {
                // retry with a uniform row once before giving up on this term
                let alt = rng.random_range(0..base.rows());
                if used.contains(&alt) {
                    break;
                }
                used.push(alt);
                acc.xor_assign(&base.row(alt));
            } else {
                used.push(next);
                acc.xor_assign(&base.row(next));
            }
        }
        let w = acc.weight();
        if w == 0 || w > weight_cap {
            continue;
        }
        if seen.insert(acc.clone()) {
            accepted.push(acc);
        }
    }
    if accepted.len() < target_count {
        return Err(Error::SearchExhausted(alloc::format!(
            "found {} of {target_count} distinct checks with weight <= {weight_cap} in {budget} attempts",
            accepted.len()
        )));
    }
    BinaryMatrix::from_bit_rows(base.cols(), &accepted)
}

/// Random subset of `count` rows (without replacement), kept in original row
/// order.
pub fn subsample_rows(h: &BinaryMatrix, count: usize, seed: u64) -> Result<BinaryMatrix> {
    if count > h.rows() {
        return Err(invalid!("cannot select {count} rows out of {}", h.rows()));
    }
    let mut rng = rng::stream(seed, &[rng::domain::SUBSAMPLE]);
    let mut idx: Vec<usize> = (0..h.rows()).collect();
    // partial Fisher-Yates
    for i in 0..count {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    let mut chosen = idx[..count].to_vec();
    chosen.sort_unstable();
    Ok(h.select_rows(&chosen))
}

/// Reduces a generator matrix to a basis of its row space and checks the
/// enumeration guard.
fn enumeration_basis(g: &BinaryMatrix, max_k: usize) -> Result<BinaryMatrix> {
    let basis = g.row_space_basis();
    if basis.rows() > max_k {
        return Err(Error::ResourceGuard(alloc::format!(
            "code dimension {} exceeds the enumeration limit {max_k}",
            basis.rows()
        )));
    }
    Ok(basis)
}

/// All codewords spanned by `g`.
///
/// Codewords come in lexicographic message order over the reduced row-echelon
/// basis of `g`: message index `i` maps to the sum of the basis rows whose
/// bit is set in `i` (basis row 0 is the least significant bit).
pub fn enumerate_codewords(g: &BinaryMatrix) -> Result<Codewords> {
    let basis = enumeration_basis(g, ENUMERATION_MAX_K)?;
    Ok(Codewords { basis, next: 0 })
}

/// Iterator returned by [`enumerate_codewords`].
#[derive(Debug, Clone)]
pub struct Codewords {
    basis: BinaryMatrix,
    next: u64,
}

impl Codewords {
    pub fn dimension(&self) -> usize {
        self.basis.rows()
    }
}

impl Iterator for Codewords {
    type Item = BitVec;

    fn next(&mut self) -> Option<BitVec> {
        let k = self.basis.rows();
        if self.next >= 1u64 << k {
            return None;
        }
        let mut word = BitVec::zeros(self.basis.cols());
        for i in 0..k {
            if self.next >> i & 1 == 1 {
                word.xor_assign(&self.basis.row(i));
            }
        }
        self.next += 1;
        Some(word)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = ((1u64 << self.basis.rows()) - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Codewords {}

/// Encodes `message` (one bit per basis row) with the rows of `g`.
pub fn encode(g: &BinaryMatrix, message: &[u8]) -> BitVec {
    assert_eq!(message.len(), g.rows(), "message length must equal generator rows");
    let mut word = BitVec::zeros(g.cols());
    for (i, &b) in message.iter().enumerate() {
        if b & 1 == 1 {
            word.xor_assign(&g.row(i));
        }
    }
    word
}

/// Parity-check matrix of the (7,4) Hamming code, column `j` holding the
/// binary expansion of `j + 1`.
pub fn hamming74_parity_check() -> BinaryMatrix {
    BinaryMatrix::from_supports(7, (0..3).map(|b| (0..7).filter(|j| (j + 1) >> b & 1 == 1).collect::<Vec<_>>()))
        .expect("static matrix")
}

/// Single parity check of length `n` (one all-ones row).
pub fn single_parity_check(n: usize) -> BinaryMatrix {
    BinaryMatrix::from_supports(n, [(0..n).collect::<Vec<_>>()]).expect("static matrix")
}

/// Parity checks of the length-`n` repetition code: `x_0 + x_i = 0`.
pub fn repetition_parity_check(n: usize) -> BinaryMatrix {
    BinaryMatrix::from_supports(n, (1..n).map(|i| [0, i])).expect("static matrix")
}

// CCSDS 231.1 TC (128,64): a 4x8 array of 16x16 blocks. Each block is the sum
// of up to two right-circulant shifts of the identity; `None` is the zero block.
const TC128_BLOCK: usize = 16;
const TC128_PROTOTYPE: [[&[usize]; 8]; 4] = [
    [&[0, 7], &[2], &[14], &[6], &[], &[0], &[13], &[0]],
    [&[6], &[0, 15], &[0], &[1], &[0], &[], &[0], &[7]],
    [&[4], &[1], &[0, 15], &[14], &[11], &[0], &[], &[3]],
    [&[0], &[1], &[9], &[0, 13], &[14], &[1], &[0], &[]],
];

/// Parity-check matrix of the CCSDS (128,64) telecommand LDPC code.
pub fn ccsds_tc128_parity_check() -> BinaryMatrix {
    let mut rows = Vec::with_capacity(4 * TC128_BLOCK);
    for block_row in &TC128_PROTOTYPE {
        for i in 0..TC128_BLOCK {
            let mut row = Vec::new();
            for (bc, shifts) in block_row.iter().enumerate() {
                for &s in shifts.iter() {
                    row.push(bc * TC128_BLOCK + (i + s) % TC128_BLOCK);
                }
            }
            rows.push(row);
        }
    }
    BinaryMatrix::from_supports(8 * TC128_BLOCK, rows).expect("static matrix")
}
