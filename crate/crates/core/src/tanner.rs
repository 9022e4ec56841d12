//! Tanner graphs.
//!
//! Edge identifiers are assigned row-major over the parity-check matrix, so
//! the edges of check node `c` form the contiguous block
//! `cn_edge_range(c)`, ordered by variable index.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::invalid;
use crate::gf2::BinaryMatrix;
use crate::Result;

/// Bipartite check/variable adjacency of one parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    vn_count: usize,
    cn_count: usize,
    // CSR over check nodes; edge id == position in `edge_vn`.
    cn_ptr: Vec<usize>,
    edge_vn: Vec<u32>,
    edge_cn: Vec<u32>,
    // CSR over variable nodes holding edge ids, sorted by check index.
    vn_ptr: Vec<usize>,
    vn_edges: Vec<u32>,
}

impl TannerGraph {
    /// Builds the graph of `h`. All-zero rows are rejected; degree-1 checks
    /// are accepted with a warning.
    pub fn build(h: &BinaryMatrix) -> Result<Self> {
        if h.cols() == 0 {
            return Err(invalid!("parity-check matrix has no columns"));
        }
        if let Some(r) = h.first_zero_row() {
            return Err(invalid!("row {r} of the parity-check matrix is all-zero"));
        }
        Ok(Self::build_unchecked(h))
    }

    /// Like [`TannerGraph::build`] but accepts a matrix with zero rows (an
    /// empty iteration).
    pub(crate) fn build_allow_empty(h: &BinaryMatrix) -> Result<Self> {
        if let Some(r) = h.first_zero_row() {
            return Err(invalid!("row {r} of the parity-check matrix is all-zero"));
        }
        Ok(Self::build_unchecked(h))
    }

    fn build_unchecked(h: &BinaryMatrix) -> Self {
        let n = h.cols();
        let m = h.rows();
        let mut cn_ptr = Vec::with_capacity(m + 1);
        let mut edge_vn = Vec::with_capacity(h.nnz());
        let mut edge_cn = Vec::with_capacity(h.nnz());
        cn_ptr.push(0);
        for c in 0..m {
            let s = h.row_support(c);
            if s.len() == 1 {
                log::warn!("check node {c} has degree 1");
            }
            edge_vn.extend_from_slice(s);
            edge_cn.extend(core::iter::repeat_n(c as u32, s.len()));
            cn_ptr.push(edge_vn.len());
        }
        let mut vn_deg = vec![0usize; n];
        for &v in &edge_vn {
            vn_deg[v as usize] += 1;
        }
        let mut vn_ptr = Vec::with_capacity(n + 1);
        vn_ptr.push(0);
        for v in 0..n {
            vn_ptr.push(vn_ptr[v] + vn_deg[v]);
        }
        let mut fill = vn_ptr[..n].to_vec();
        let mut vn_edges = vec![0u32; edge_vn.len()];
        // row-major scan keeps each VN's edges sorted by check index
        for (e, &v) in edge_vn.iter().enumerate() {
            vn_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        TannerGraph { vn_count: n, cn_count: m, cn_ptr, edge_vn, edge_cn, vn_ptr, vn_edges }
    }

    pub fn vn_count(&self) -> usize {
        self.vn_count
    }

    pub fn cn_count(&self) -> usize {
        self.cn_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_vn.len()
    }

    /// Edge ids of check node `c`.
    #[inline]
    pub fn cn_edge_range(&self, c: usize) -> Range<usize> {
        self.cn_ptr[c]..self.cn_ptr[c + 1]
    }

    /// Variable neighbours N(c), ascending.
    #[inline]
    pub fn cn_neighbors(&self, c: usize) -> &[u32] {
        &self.edge_vn[self.cn_edge_range(c)]
    }

    /// Edge ids at variable node `v`, in ascending check order.
    #[inline]
    pub fn vn_edges(&self, v: usize) -> &[u32] {
        &self.vn_edges[self.vn_ptr[v]..self.vn_ptr[v + 1]]
    }

    /// Check neighbours N(v), ascending.
    pub fn vn_neighbors(&self, v: usize) -> Vec<u32> {
        self.vn_edges(v).iter().map(|&e| self.edge_cn[e as usize]).collect()
    }

    pub fn cn_degree(&self, c: usize) -> usize {
        self.cn_ptr[c + 1] - self.cn_ptr[c]
    }

    pub fn vn_degree(&self, v: usize) -> usize {
        self.vn_ptr[v + 1] - self.vn_ptr[v]
    }

    /// `(v, c)` endpoints of edge `e`.
    #[inline]
    pub fn edge(&self, e: usize) -> (usize, usize) {
        (self.edge_vn[e] as usize, self.edge_cn[e] as usize)
    }

    /// Variable endpoint of every edge, indexed by edge id.
    #[inline]
    pub fn edge_vns(&self) -> &[u32] {
        &self.edge_vn
    }

    /// Edge id of `(v, c)`, if present.
    pub fn edge_id(&self, v: usize, c: usize) -> Option<usize> {
        let r = self.cn_edge_range(c);
        self.edge_vn[r.clone()].binary_search(&(v as u32)).ok().map(|i| r.start + i)
    }

    /// Rebuilds the parity-check matrix from the edge table.
    pub fn to_matrix(&self) -> BinaryMatrix {
        BinaryMatrix::from_supports(
            self.vn_count,
            (0..self.cn_count).map(|c| self.cn_neighbors(c).iter().map(|&v| v as usize).collect::<Vec<_>>()),
        )
        .expect("graph edges are in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_graph_read_off() {
        let h = BinaryMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
        let g = TannerGraph::build(&h).unwrap();
        assert_eq!(g.cn_neighbors(0), &[0, 1]);
        assert_eq!(g.cn_neighbors(1), &[1, 2]);
        assert_eq!(g.vn_neighbors(1), vec![0, 1]);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.edge(2), (1, 1));
        assert_eq!(g.edge_id(2, 1), Some(3));
        assert_eq!(g.edge_id(2, 0), None);
        assert_eq!(g.to_matrix(), h);
    }

    #[test]
    fn zero_row_rejected() {
        let h = BinaryMatrix::from_dense(2, 3, &[1, 1, 0, 0, 0, 0]).unwrap();
        assert!(TannerGraph::build(&h).is_err());
    }

    #[test]
    fn degree_one_check_allowed() {
        let h = BinaryMatrix::from_dense(1, 3, &[0, 1, 0]).unwrap();
        let g = TannerGraph::build(&h).unwrap();
        assert_eq!(g.cn_degree(0), 1);
        assert_eq!(g.vn_degree(0), 0);
    }
}
