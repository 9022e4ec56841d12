//! Bit matrices over GF(2).
//!
//! [`BinaryMatrix`] keeps two views of the same matrix: bit-packed rows for
//! linear algebra and per-row support lists (column indices of the ones) for
//! message passing. Both views are built once and never mutated; every
//! "modifying" operation returns a new matrix.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::invalid;
use crate::Result;

const WORD: usize = 64;

#[inline]
fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD)
}

/// Dense bit-packed binary matrix with per-row support lists.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
    row_ptr: Vec<usize>,
    support: Vec<u32>,
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryMatrix({}x{}", self.rows, self.cols)?;
        if self.rows <= 16 && self.cols <= 64 {
            for r in 0..self.rows {
                f.write_str("\n  ")?;
                for c in 0..self.cols {
                    f.write_str(if self.get(r, c) { "1" } else { "0" })?;
                }
            }
        }
        f.write_str(")")
    }
}

impl BinaryMatrix {
    /// Builds a matrix from packed rows (`words_for(cols)` words per row).
    fn from_packed(rows: usize, cols: usize, bits: Vec<u64>) -> Self {
        let words = words_for(cols);
        debug_assert_eq!(bits.len(), rows * words);
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut support = Vec::new();
        row_ptr.push(0);
        for r in 0..rows {
            for (w, &word) in bits[r * words..(r + 1) * words].iter().enumerate() {
                let mut x = word;
                while x != 0 {
                    let b = x.trailing_zeros() as usize;
                    support.push((w * WORD + b) as u32);
                    x &= x - 1;
                }
            }
            row_ptr.push(support.len());
        }
        BinaryMatrix { rows, cols, words, bits, row_ptr, support }
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_packed(rows, cols, vec![0; rows * words_for(cols)])
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        Self::from_supports(n, (0..n).map(|i| vec![i])).expect("identity in range")
    }

    /// Builds a matrix from per-row column index lists. Indices may come in
    /// any order; duplicates within a row are rejected.
    pub fn from_supports<I, R>(cols: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[usize]>,
    {
        let words = words_for(cols);
        let mut bits = Vec::new();
        let mut count = 0;
        for (r, row) in rows.into_iter().enumerate() {
            let start = bits.len();
            bits.resize(start + words, 0u64);
            for &c in row.as_ref() {
                if c >= cols {
                    return Err(invalid!("row {r}: column {c} out of range for {cols} columns"));
                }
                let (w, b) = (c / WORD, c % WORD);
                if bits[start + w] >> b & 1 == 1 {
                    return Err(invalid!("row {r}: duplicate column {c}"));
                }
                bits[start + w] |= 1 << b;
            }
            count += 1;
        }
        Ok(Self::from_packed(count, cols, bits))
    }

    /// Builds a matrix from a row-major slice of 0/1 values.
    pub fn from_dense(rows: usize, cols: usize, entries: &[u8]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(invalid!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            ));
        }
        let mut supports = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &entries[r * cols..(r + 1) * cols];
            let mut s = Vec::new();
            for (c, &e) in row.iter().enumerate() {
                match e {
                    0 => {}
                    1 => s.push(c),
                    other => return Err(invalid!("entry ({r},{c}) = {other} is not a bit")),
                }
            }
            supports.push(s);
        }
        Self::from_supports(cols, supports)
    }

    /// Builds a matrix from rows given as packed bit vectors.
    pub fn from_bit_rows(cols: usize, rows: &[BitVec]) -> Result<Self> {
        let words = words_for(cols);
        let mut bits = Vec::with_capacity(rows.len() * words);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(invalid!("row {r} has length {}, expected {cols}", row.len()));
            }
            bits.extend_from_slice(row.words());
        }
        Ok(Self::from_packed(rows.len(), cols, bits))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of ones.
    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "index ({row},{col}) out of range");
        self.bits[row * self.words + col / WORD] >> (col % WORD) & 1 == 1
    }

    /// Column indices of the ones in `row`, strictly increasing.
    #[inline]
    pub fn row_support(&self, row: usize) -> &[u32] {
        &self.support[self.row_ptr[row]..self.row_ptr[row + 1]]
    }

    /// Packed words of `row`.
    #[inline]
    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words..(row + 1) * self.words]
    }

    /// Row `row` as an owned bit vector.
    pub fn row(&self, row: usize) -> BitVec {
        BitVec { len: self.cols, words: self.row_words(row).to_vec() }
    }

    pub fn row_weight(&self, row: usize) -> usize {
        self.row_ptr[row + 1] - self.row_ptr[row]
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.rows).map(|r| self.row_weight(r)).collect()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for &c in &self.support {
            w[c as usize] += 1;
        }
        w
    }

    /// Iterator over `(row, col)` positions of ones in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows)
            .flat_map(move |r| self.row_support(r).iter().map(move |&c| (r, c as usize)))
    }

    /// Index of the first all-zero row, if any.
    pub fn first_zero_row(&self) -> Option<usize> {
        (0..self.rows).find(|&r| self.row_weight(r) == 0)
    }

    /// Matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut bits = Vec::with_capacity(rows.len() * self.words);
        for &r in rows {
            bits.extend_from_slice(self.row_words(r));
        }
        Self::from_packed(rows.len(), self.cols, bits)
    }

    /// Copy without row `row`.
    pub fn without_row(&self, row: usize) -> Self {
        let keep: Vec<usize> = (0..self.rows).filter(|&r| r != row).collect();
        self.select_rows(&keep)
    }

    /// Rows of `self` stacked over rows of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(invalid!("column mismatch {} vs {}", self.cols, other.cols));
        }
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Ok(Self::from_packed(self.rows + other.rows, self.cols, bits))
    }

    /// True if two rows carry identical bits.
    pub fn has_duplicate_rows(&self) -> bool {
        let mut seen = BTreeSet::new();
        (0..self.rows).any(|r| !seen.insert(self.row_words(r)))
    }

    /// `H x^T` over GF(2).
    pub fn syndrome(&self, x: &BitVec) -> BitVec {
        assert_eq!(x.len(), self.cols, "vector length must equal column count");
        let mut s = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            let parity = self
                .row_words(r)
                .iter()
                .zip(x.words())
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            s.set(r, parity == 1);
        }
        s
    }

    /// Syndrome of a codeword given as one byte per bit.
    pub fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        assert_eq!(bits.len(), self.cols, "vector length must equal column count");
        (0..self.rows).all(|r| {
            self.row_support(r).iter().fold(0u8, |acc, &c| acc ^ (bits[c as usize] & 1)) == 0
        })
    }

    /// True if every row of `self` is orthogonal to every row of `other`.
    pub fn is_orthogonal_to(&self, other: &Self) -> bool {
        if self.cols != other.cols {
            return false;
        }
        (0..self.rows).all(|a| {
            let ra = self.row_words(a);
            (0..other.rows).all(|b| {
                ra.iter()
                    .zip(other.row_words(b))
                    .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones())
                    & 1
                    == 0
            })
        })
    }

    /// GF(2) rank by Gaussian elimination on a copy of the rows.
    pub fn rank(&self) -> usize {
        self.row_echelon().len()
    }

    /// Reduced row-echelon basis of the row space, one bit vector per pivot
    /// row, with the pivot columns.
    fn reduced_echelon(&self) -> (Vec<Vec<u64>>, Vec<usize>) {
        let mut basis: Vec<Vec<u64>> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for r in 0..self.rows {
            let mut v = self.row_words(r).to_vec();
            for (b, &p) in basis.iter().zip(&pivots) {
                if v[p / WORD] >> (p % WORD) & 1 == 1 {
                    xor_into(&mut v, b);
                }
            }
            if let Some(p) = first_one(&v) {
                for (b, _) in basis.iter_mut().zip(&pivots) {
                    if b[p / WORD] >> (p % WORD) & 1 == 1 {
                        xor_into(b, &v);
                    }
                }
                basis.push(v);
                pivots.push(p);
            }
        }
        (basis, pivots)
    }

    fn row_echelon(&self) -> Vec<Vec<u64>> {
        self.reduced_echelon().0
    }

    /// Basis of the row space as a matrix with `rank` rows.
    pub fn row_space_basis(&self) -> Self {
        let (basis, _) = self.reduced_echelon();
        let rows = basis.len();
        Self::from_packed(rows, self.cols, basis.concat())
    }

    /// Basis of the right nullspace `{x : M x^T = 0}` as matrix rows.
    pub fn nullspace(&self) -> Self {
        let (basis, pivots) = self.reduced_echelon();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut out = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u64; self.words];
            v[free / WORD] |= 1 << (free % WORD);
            for (b, &p) in basis.iter().zip(&pivots) {
                if b[free / WORD] >> (free % WORD) & 1 == 1 {
                    v[p / WORD] |= 1 << (p % WORD);
                }
            }
            out.push(v);
        }
        let rows = out.len();
        Self::from_packed(rows, self.cols, out.concat())
    }

    /// Whether `x` lies in the row space.
    pub fn row_space_contains(&self, x: &BitVec) -> bool {
        let (basis, pivots) = self.reduced_echelon();
        let mut v = x.words().to_vec();
        for (b, &p) in basis.iter().zip(&pivots) {
            if v[p / WORD] >> (p % WORD) & 1 == 1 {
                xor_into(&mut v, b);
            }
        }
        v.iter().all(|&w| w == 0)
    }

    /// Dense 0/1 rows, for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) as u8).collect())
            .collect()
    }
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

#[inline]
fn first_one(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * WORD + w.trailing_zeros() as usize)
}

/// Fixed-length packed bit vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b & 1 == 1);
        }
        v
    }

    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len);
        xor_into(&mut self.words, &other.words);
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rank() {
        assert_eq!(BinaryMatrix::identity(4).rank(), 4);
    }

    #[test]
    fn duplicate_rows_rank_one() {
        let m = BinaryMatrix::from_dense(2, 3, &[1, 0, 1, 1, 0, 1]).unwrap();
        assert_eq!(m.rank(), 1);
        assert!(m.has_duplicate_rows());
    }

    #[test]
    fn supports_are_sorted_and_consistent() {
        let m = BinaryMatrix::from_supports(70, [vec![69, 3, 64], vec![0]]).unwrap();
        assert_eq!(m.row_support(0), &[3, 64, 69]);
        for (r, c) in m.iter_ones() {
            assert!(m.get(r, c));
        }
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.column_weights()[69], 1);
    }

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        assert!(BinaryMatrix::from_supports(3, [vec![3]]).is_err());
        assert!(BinaryMatrix::from_supports(3, [vec![1, 1]]).is_err());
        assert!(BinaryMatrix::from_dense(1, 2, &[1, 2]).is_err());
    }

    #[test]
    fn nullspace_is_orthogonal_and_complementary() {
        // (7,4) Hamming parity checks.
        let h = BinaryMatrix::from_dense(
            3,
            7,
            &[
                1, 0, 1, 0, 1, 0, 1, //
                0, 1, 1, 0, 0, 1, 1, //
                0, 0, 0, 1, 1, 1, 1,
            ],
        )
        .unwrap();
        let g = h.nullspace();
        assert_eq!(g.rows(), 4);
        assert_eq!(g.rank(), 4);
        assert!(g.is_orthogonal_to(&h));
        assert_eq!(g.nullspace().rank(), 3);
    }

    #[test]
    fn syndrome_matches_dense_product() {
        let h = BinaryMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
        let x = BitVec::from_bits(&[1, 1, 0]);
        assert_eq!(h.syndrome(&x).to_bits(), vec![0, 1]);
        assert!(!h.syndrome_is_zero(&[1, 1, 0]));
        assert!(h.syndrome_is_zero(&[1, 1, 1]));
    }

    #[test]
    fn row_space_membership() {
        let m = BinaryMatrix::from_dense(2, 4, &[1, 1, 0, 0, 0, 1, 1, 0]).unwrap();
        assert!(m.row_space_contains(&BitVec::from_bits(&[1, 0, 1, 0])));
        assert!(!m.row_space_contains(&BitVec::from_bits(&[0, 0, 0, 1])));
    }
}
