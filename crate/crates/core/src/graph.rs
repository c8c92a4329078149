//! Bit-packed undirected simple graphs and their edge-list interchange format.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::edge::EdgeIndex;
use crate::error::{Error, Result};

/// Undirected graph without self-loops. Edge `m` (see [`EdgeIndex`]) is bit `m % 64`
/// of word `m / 64`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    index: EdgeIndex,
    words: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    n_nodes: usize,
}

impl Graph {
    pub fn empty(n_nodes: usize) -> Self {
        let index = EdgeIndex::new(n_nodes);
        Self {
            index,
            words: vec![0; index.total().div_ceil(64)],
        }
    }

    pub fn complete(n_nodes: usize) -> Self {
        let mut g = Self::empty(n_nodes);
        for m in 0..g.n_edge_vars() {
            g.set_linear(m, true);
        }
        g
    }

    /// Graph from 0-based node pairs.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n_nodes);
        for &(i, j) in edges {
            let m = g.index.linear(i, j)?;
            g.set_linear(m, true);
        }
        Ok(g)
    }

    /// Graph whose edge `m` is bit `m` of `code`. Requires `M <= 64`.
    pub fn from_code(n_nodes: usize, code: u64) -> Self {
        let mut g = Self::empty(n_nodes);
        assert!(
            g.n_edge_vars() <= 64,
            "from_code needs at most 64 edge variables"
        );
        if !g.words.is_empty() {
            let mask = if g.n_edge_vars() == 64 {
                u64::MAX
            } else {
                (1u64 << g.n_edge_vars()) - 1
            };
            g.words[0] = code & mask;
        }
        g
    }

    /// Inverse of [`Graph::from_code`].
    pub fn code(&self) -> u64 {
        assert!(
            self.n_edge_vars() <= 64,
            "code needs at most 64 edge variables"
        );
        self.words.first().copied().unwrap_or(0)
    }

    pub fn n_nodes(&self) -> usize {
        self.index.n_nodes()
    }

    pub fn n_edge_vars(&self) -> usize {
        self.index.total()
    }

    pub fn index(&self) -> &EdgeIndex {
        &self.index
    }

    #[inline]
    pub fn get_linear(&self, m: usize) -> bool {
        (self.words[m >> 6] >> (m & 63)) & 1 == 1
    }

    #[inline]
    pub fn set_linear(&mut self, m: usize, value: bool) {
        let bit = 1u64 << (m & 63);
        if value {
            self.words[m >> 6] |= bit;
        } else {
            self.words[m >> 6] &= !bit;
        }
    }

    #[inline]
    pub fn flip_linear(&mut self, m: usize) {
        self.words[m >> 6] ^= 1u64 << (m & 63);
    }

    /// `x_{i,j}`; false for `i == j`.
    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.get_linear(self.index.linear_unchecked(i, j))
    }

    pub fn set_edge(&mut self, i: usize, j: usize, value: bool) -> Result<()> {
        let m = self.index.linear(i, j)?;
        self.set_linear(m, value);
        Ok(())
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n_nodes()).filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_nodes()];
        for (i, j) in self.edges() {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn edge_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Present edges as 0-based `(i, j)`, `i < j`, in linear order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_edge_vars())
            .filter(|&m| self.get_linear(m))
            .map(|m| self.index.pair_unchecked(m))
    }

    /// Graph with node `v` relabelled as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                got: perm.len(),
            });
        }
        let edges: Vec<_> = self.edges().map(|(i, j)| (perm[i], perm[j])).collect();
        Self::from_edges(self.n_nodes(), &edges)
    }

    /// Writes the edge list (`i,j` header, 1-based) and a `<stem>.json` sidecar holding `n_nodes`.
    pub fn write_edge_list(&self, csv_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(["i", "j"])?;
        for (i, j) in self.edges() {
            w.write_record([(i + 1).to_string(), (j + 1).to_string()])?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            n_nodes: self.n_nodes(),
        };
        fs::write(
            sidecar_path(csv_path),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        Ok(())
    }

    /// Reads an edge list written by [`Graph::write_edge_list`]. Duplicate pairs,
    /// self-loops and out-of-range nodes are rejected.
    pub fn read_edge_list(csv_path: &Path) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(csv_path))?)?;
        let text = fs::read_to_string(csv_path)?;
        Self::parse_edge_list(&text, sidecar.n_nodes)
    }

    pub fn parse_edge_list(text: &str, n_nodes: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "i" || &headers[1] != "j" {
            return Err(Error::InvalidInput(format!(
                "edge list header must be `i,j`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut seen = HashSet::new();
        let mut g = Self::empty(n_nodes);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| -> Result<usize> {
                s.parse::<usize>().map_err(|_| {
                    Error::InvalidInput(format!("row {}: bad node id `{s}`", line + 1))
                })
            };
            let (i, j) = (parse(&rec[0])?, parse(&rec[1])?);
            if i == j {
                return Err(Error::InvalidInput(format!(
                    "row {}: self-loop on node {i}",
                    line + 1
                )));
            }
            if i == 0 || j == 0 || i > n_nodes || j > n_nodes {
                return Err(Error::InvalidInput(format!(
                    "row {}: node out of range 1..={n_nodes}",
                    line + 1
                )));
            }
            let m = g.index.linear_unchecked(i - 1, j - 1);
            if !seen.insert(m) {
                return Err(Error::InvalidInput(format!(
                    "row {}: duplicate edge {{{i}, {j}}}",
                    line + 1
                )));
            }
            g.set_linear(m, true);
        }
        Ok(g)
    }
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_and_counts() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(g.degrees(), vec![2, 2, 2, 2]);
        assert_eq!(g.edge_count(), 4);
        assert!(g.has_edge(3, 0));
        assert!(!g.has_edge(0, 2));
        assert!(!g.has_edge(1, 1));
        assert_eq!(g.degree(1), 2);
    }

    #[test]
    fn code_roundtrip() {
        let g = Graph::from_code(4, 0b101101);
        assert_eq!(g.code(), 0b101101);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn parse_rejects_bad_rows() {
        assert!(Graph::parse_edge_list("i,j\n1,2\n2,1\n", 3).is_err());
        assert!(Graph::parse_edge_list("i,j\n2,2\n", 3).is_err());
        assert!(Graph::parse_edge_list("i,j\n1,4\n", 3).is_err());
        assert!(Graph::parse_edge_list("a,b\n1,2\n", 3).is_err());
        let g = Graph::parse_edge_list("i,j\n1,2\n2,3\n", 3).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn edge_list_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = Graph::from_edges(6, &[(0, 5), (2, 3), (1, 4)]).unwrap();
        g.write_edge_list(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("i,j\n1,6\n"));
        assert_eq!(Graph::read_edge_list(&path).unwrap(), g);
    }
}
