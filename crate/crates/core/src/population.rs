//! Nodes, overlapping subpopulations, neighborhoods and their pairwise intersections.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node set with overlapping subpopulations. All node ids are 0-based in the API and
/// 1-based in the JSON form.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    n_nodes: usize,
    subpops: Vec<Vec<usize>>,
    memberships: Vec<Vec<usize>>,
    neighborhoods: Vec<Vec<usize>>,
    intersections: BTreeMap<(usize, usize), Vec<usize>>,
    max_neighborhood: usize,
    assumption_min3: bool,
}

/// Serialized form: `{"n_nodes": N, "subpops": [[1, 2, 3], ...]}` with 1-based ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationJson {
    pub n_nodes: usize,
    pub subpops: Vec<Vec<usize>>,
}

/// Builds a population from 0-based subpopulation member lists.
pub fn build_population(subpops: &[Vec<usize>], n_nodes: usize) -> Result<Population> {
    Population::new(subpops, n_nodes)
}

impl Population {
    pub fn new(subpops: &[Vec<usize>], n_nodes: usize) -> Result<Self> {
        let mut clean = Vec::with_capacity(subpops.len());
        let mut memberships = vec![Vec::new(); n_nodes];
        for (k, members) in subpops.iter().enumerate() {
            let mut m = members.clone();
            m.sort_unstable();
            m.dedup();
            for &v in &m {
                if v >= n_nodes {
                    return Err(Error::BadNodeId {
                        subpop: k,
                        node: v,
                        n_nodes,
                    });
                }
                memberships[v].push(k);
            }
            clean.push(m);
        }
        if let Some(node) = memberships.iter().position(|m| m.is_empty()) {
            return Err(Error::EmptyCoverage { node });
        }

        let mut flags = vec![false; n_nodes];
        let mut neighborhoods = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let mut nb = Vec::new();
            for &k in &memberships[i] {
                for &j in &clean[k] {
                    if j != i && !flags[j] {
                        flags[j] = true;
                        nb.push(j);
                    }
                }
            }
            for &j in &nb {
                flags[j] = false;
            }
            nb.sort_unstable();
            neighborhoods.push(nb);
        }

        // Pairs with a common neighbor h are exactly the pairs inside some N_h.
        let mut intersections: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (h, nb) in neighborhoods.iter().enumerate() {
            for (a_pos, &a) in nb.iter().enumerate() {
                for &b in &nb[a_pos + 1..] {
                    intersections.entry((a, b)).or_default().push(h);
                }
            }
        }

        let max_neighborhood = neighborhoods.iter().map(Vec::len).max().unwrap_or(0);
        let assumption_min3 = clean.iter().all(|m| m.len() >= 3);
        Ok(Self {
            n_nodes,
            subpops: clean,
            memberships,
            neighborhoods,
            intersections,
            max_neighborhood,
            assumption_min3,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_subpops(&self) -> usize {
        self.subpops.len()
    }

    /// Sorted members of each subpopulation.
    pub fn subpops(&self) -> &[Vec<usize>] {
        &self.subpops
    }

    /// Subpopulations containing node `i`, ascending.
    pub fn memberships(&self, i: usize) -> &[usize] {
        &self.memberships[i]
    }

    /// `N_i`, sorted.
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.neighborhoods[i].binary_search(&j).is_ok()
    }

    /// `N_i ∩ N_j`, sorted; empty slice when the pair is absent from the index.
    pub fn intersection(&self, i: usize, j: usize) -> &[usize] {
        let key = if i < j { (i, j) } else { (j, i) };
        self.intersections
            .get(&key)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn intersection_size(&self, i: usize, j: usize) -> usize {
        self.intersection(i, j).len()
    }

    /// Pairs `(i, j)`, `i < j`, with a nonempty intersection, and their members.
    pub fn intersections(&self) -> &BTreeMap<(usize, usize), Vec<usize>> {
        &self.intersections
    }

    /// `D = max_i |N_i|`.
    pub fn max_neighborhood(&self) -> usize {
        self.max_neighborhood
    }

    /// True when every subpopulation has at least three members.
    pub fn assumption_min3(&self) -> bool {
        self.assumption_min3
    }

    /// True when `i` and `j` belong to a common subpopulation.
    pub fn share_subpop(&self, i: usize, j: usize) -> bool {
        i != j && self.are_neighbors(i, j)
    }

    pub fn to_json(&self) -> PopulationJson {
        PopulationJson {
            n_nodes: self.n_nodes,
            subpops: self
                .subpops
                .iter()
                .map(|m| m.iter().map(|v| v + 1).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &PopulationJson) -> Result<Self> {
        let mut subpops = Vec::with_capacity(json.subpops.len());
        for (k, members) in json.subpops.iter().enumerate() {
            let mut m = Vec::with_capacity(members.len());
            for &v in members {
                if v == 0 || v > json.n_nodes {
                    return Err(Error::BadNodeId {
                        subpop: k + 1,
                        node: v,
                        n_nodes: json.n_nodes,
                    });
                }
                m.push(v - 1);
            }
            subpops.push(m);
        }
        Self::new(&subpops, json.n_nodes)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let json: PopulationJson = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_json(&json)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }

    /// A single subpopulation containing every node.
    pub fn single(n_nodes: usize) -> Self {
        Self::new(&[(0..n_nodes).collect()], n_nodes)
            .expect("single subpopulation covers all nodes")
    }

    /// `k` subpopulations of size `size`, consecutive ones sharing exactly one node.
    pub fn chain(k: usize, size: usize) -> Self {
        assert!(k >= 1 && size >= 2);
        let step = size - 1;
        let subpops: Vec<Vec<usize>> = (0..k)
            .map(|s| (s * step..s * step + size).collect())
            .collect();
        let n = k * step + 1;
        Self::new(&subpops, n).expect("chain covers all nodes")
    }

    /// A hub subpopulation of `max(leaves, 3)` nodes plus `leaves` subpopulations of
    /// `leaf_size` nodes, the `l`-th of which shares only hub node `l`.
    pub fn star(leaves: usize, leaf_size: usize) -> Self {
        assert!(leaf_size >= 2);
        let hub = leaves.max(3);
        let mut subpops = vec![(0..hub).collect::<Vec<_>>()];
        let mut next = hub;
        for l in 0..leaves {
            let mut m = vec![l];
            m.extend(next..next + leaf_size - 1);
            next += leaf_size - 1;
            subpops.push(m);
        }
        Self::new(&subpops, next).expect("star covers all nodes")
    }
}
