//! Lexicographic indexing of the unordered node pairs of a graph.
//!
//! Nodes are 0-based here. Pair `(i, j)` with `i < j` maps to
//! `i * (2n - i - 1) / 2 + (j - i - 1)`, so `(0,1), (0,2), ..., (0,n-1), (1,2), ...`
//! occupy `0, 1, 2, ...`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeIndex {
    n_nodes: usize,
    total: usize,
}

impl EdgeIndex {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            total: n_nodes * n_nodes.saturating_sub(1) / 2,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of edge variables `M = N(N-1)/2`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Linear index of the pair `{i, j}`; the order of the arguments does not matter.
    pub fn linear(&self, i: usize, j: usize) -> Result<usize> {
        if i == j || i >= self.n_nodes || j >= self.n_nodes {
            return Err(Error::OutOfRange(format!(
                "pair ({i}, {j}) with {} nodes",
                self.n_nodes
            )));
        }
        Ok(self.linear_unchecked(i, j))
    }

    /// Same as [`EdgeIndex::linear`] without bounds checks. Requires `i != j`.
    #[inline]
    pub fn linear_unchecked(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * (2 * self.n_nodes - a - 1) / 2 + (b - a - 1)
    }

    /// Inverse of [`EdgeIndex::linear`]: returns `(i, j)` with `i < j`.
    pub fn pair(&self, m: usize) -> Result<(usize, usize)> {
        if m >= self.total {
            return Err(Error::OutOfRange(format!(
                "edge index {m} with {} edge variables",
                self.total
            )));
        }
        Ok(self.pair_unchecked(m))
    }

    #[inline]
    pub fn pair_unchecked(&self, m: usize) -> (usize, usize) {
        let n = self.n_nodes;
        // Row i starts at i*(2n-i-1)/2; solve the quadratic then correct for rounding.
        let nf = n as f64;
        let disc = (2.0 * nf - 1.0).powi(2) - 8.0 * m as f64;
        let mut i = (((2.0 * nf - 1.0) - disc.max(0.0).sqrt()) / 2.0).floor() as usize;
        let row_start = |r: usize| r * (2 * n - r - 1) / 2;
        while i > 0 && row_start(i) > m {
            i -= 1;
        }
        while i + 1 < n && row_start(i + 1) <= m {
            i += 1;
        }
        let j = m - row_start(i) + i + 1;
        (i, j)
    }

    /// Iterator over all pairs in linear order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_nodes;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_nodes_lexicographic() {
        let idx = EdgeIndex::new(4);
        assert_eq!(idx.total(), 6);
        assert_eq!(idx.linear(0, 1).unwrap(), 0);
        assert_eq!(idx.linear(0, 2).unwrap(), 1);
        assert_eq!(idx.linear(0, 3).unwrap(), 2);
        assert_eq!(idx.linear(1, 2).unwrap(), 3);
        assert_eq!(idx.pair(5).unwrap(), (2, 3));
        assert_eq!(idx.pair(idx.linear(1, 3).unwrap()).unwrap(), (1, 3));
        assert_eq!(idx.linear(3, 1).unwrap(), idx.linear(1, 3).unwrap());
    }

    #[test]
    fn out_of_range() {
        let idx = EdgeIndex::new(4);
        assert!(idx.linear(2, 2).is_err());
        assert!(idx.linear(0, 4).is_err());
        assert!(idx.pair(6).is_err());
    }

    #[test]
    fn exhaustive_roundtrip_up_to_64_nodes() {
        for n in 2..=64 {
            let idx = EdgeIndex::new(n);
            for (expected, (i, j)) in idx.pairs().enumerate() {
                assert_eq!(idx.linear(i, j).unwrap(), expected);
            }
            for m in 0..idx.total() {
                let (i, j) = idx.pair(m).unwrap();
                assert!(i < j && j < n);
                assert_eq!(idx.linear(i, j).unwrap(), m);
            }
        }
    }
}
