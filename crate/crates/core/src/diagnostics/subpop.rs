//! Subpopulation overlap graph and the two structural growth conditions on it.

use std::collections::VecDeque;

use serde::Serialize;

use crate::population::Population;

/// Vertices are subpopulations; `k ~ l` iff they share a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubpopGraph {
    adjacency: Vec<Vec<usize>>,
    /// `distances[k][l]`, `None` when disconnected.
    distances: Vec<Vec<Option<usize>>>,
}

impl SubpopGraph {
    pub fn new(pop: &Population) -> Self {
        let k = pop.n_subpops();
        let mut adjacency = vec![Vec::new(); k];
        for v in 0..pop.n_nodes() {
            let ms = pop.memberships(v);
            for (p, &a) in ms.iter().enumerate() {
                for &b in &ms[p + 1..] {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
        for a in &mut adjacency {
            a.sort_unstable();
            a.dedup();
        }
        let distances = (0..k).map(|s| bfs(&adjacency, s)).collect();
        Self {
            adjacency,
            distances,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.adjacency[k]
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<usize> {
        self.distances[a][b]
    }

    pub fn is_connected(&self) -> bool {
        self.distances
            .first()
            .is_none_or(|row| row.iter().all(Option::is_some))
    }

    /// Connected and acyclic.
    pub fn is_tree(&self) -> bool {
        self.n_vertices() > 0 && self.is_connected() && self.n_edges() + 1 == self.n_vertices()
    }

    /// `max_k |V_{k,l}|` for `l = 1, 2, ..` up to the largest finite distance.
    pub fn max_layer_sizes(&self) -> Vec<usize> {
        let diam = self
            .distances
            .iter()
            .flatten()
            .filter_map(|d| *d)
            .max()
            .unwrap_or(0);
        let mut out = vec![0; diam];
        for row in &self.distances {
            let mut counts = vec![0; diam + 1];
            for d in row.iter().flatten() {
                counts[*d] += 1;
            }
            for l in 1..=diam {
                out[l - 1] = out[l - 1].max(counts[l]);
            }
        }
        out
    }
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; adj.len()];
    d[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        let dv = d[v].unwrap_or(0);
        for &w in &adj[v] {
            if d[w].is_none() {
                d[w] = Some(dv + 1);
                q.push_back(w);
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct B1Params {
    pub omega1: f64,
    pub omega2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct B1Check {
    pub omega1: f64,
    pub omega2: f64,
    /// `max_k |V_{k,l}| <= ω₁ + ω₂/(8D²) · ln l` for every observed `l`.
    pub raw_holds: bool,
    /// `8D² · max_k |V_{k,l}| <= ω₁ + ω₂ · ln l`, with `ω₁` already carrying the `8D²` factor.
    pub absorbed_holds: bool,
    /// Distances `l` at which the raw form fails.
    pub raw_violations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct B2Check {
    pub tree: bool,
    /// `ln g(l) / l` for each observed `l`, with `g(l) = max_k |V_{k,l}|`.
    pub log_growth_over_l: Vec<f64>,
    pub max_log_growth_over_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionBReport {
    pub max_layer_sizes: Vec<usize>,
    pub d: usize,
    pub b1: Option<B1Check>,
    pub b2: B2Check,
}

pub fn check_b1(layers: &[usize], d: usize, params: B1Params) -> B1Check {
    let d2 = 8.0 * (d as f64).powi(2);
    let mut raw_violations = Vec::new();
    let mut absorbed_holds = true;
    for (pos, &size) in layers.iter().enumerate() {
        let l = (pos + 1) as f64;
        if size as f64 > params.omega1 + params.omega2 / d2.max(f64::MIN_POSITIVE) * l.ln() {
            raw_violations.push(pos + 1);
        }
        if d2 * size as f64 > params.omega1 + params.omega2 * l.ln() {
            absorbed_holds = false;
        }
    }
    B1Check {
        omega1: params.omega1,
        omega2: params.omega2,
        raw_holds: raw_violations.is_empty(),
        absorbed_holds,
        raw_violations,
    }
}

pub fn check_b2(sg: &SubpopGraph, layers: &[usize]) -> B2Check {
    let log_growth_over_l: Vec<f64> = layers
        .iter()
        .enumerate()
        .map(|(pos, &g)| (g.max(1) as f64).ln() / (pos + 1) as f64)
        .collect();
    B2Check {
        tree: sg.is_tree(),
        max_log_growth_over_l: log_growth_over_l.iter().copied().fold(0.0, f64::max),
        log_growth_over_l,
    }
}

/// Layer sizes of the subpopulation graph against both growth conditions. `d` is
/// `D = max_i |N_i|`.
pub fn check_assumption_b(sg: &SubpopGraph, d: usize, b1: Option<B1Params>) -> AssumptionBReport {
    let layers = sg.max_layer_sizes();
    AssumptionBReport {
        b1: b1.map(|p| check_b1(&layers, d, p)),
        b2: check_b2(sg, &layers),
        d,
        max_layer_sizes: layers,
    }
}
