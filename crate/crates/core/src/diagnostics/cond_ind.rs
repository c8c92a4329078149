//! Conditional-independence graph over edge variables and empirical checks of the
//! independence statements it implies.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::edge::EdgeIndex;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::models::{ModelSpec, Theta, Variant};
use crate::population::Population;
use crate::rng::stream;
use crate::state::GraphState;

/// Undirected graph on edge-variable indices `0..M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondIndGraph {
    index: EdgeIndex,
    adjacency: Vec<Vec<usize>>,
}

impl CondIndGraph {
    pub fn n_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn index(&self) -> &EdgeIndex {
        &self.index
    }

    /// Sorted neighbors of vertex `m`.
    pub fn neighbors(&self, m: usize) -> &[usize] {
        &self.adjacency[m]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Connected components as sorted vertex lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let m = self.n_vertices();
        let mut seen = vec![false; m];
        let mut out = Vec::new();
        for s in 0..m {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                k += 1;
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Edge variables read by the brokerage factor of pair `{a, b}`:
/// `{a,b}` itself and `{a,h}, {b,h}` for `h ∈ N_a ∩ N_b`.
fn factor_scope(pop: &Population, idx: &EdgeIndex, a: usize, b: usize) -> Vec<usize> {
    let mut s = vec![idx.linear_unchecked(a, b)];
    for &h in pop.intersection(a, b) {
        s.push(idx.linear_unchecked(a, h));
        s.push(idx.linear_unchecked(b, h));
    }
    s
}

/// Two edge variables are adjacent iff some factor of the density reads both. The
/// beta model has no multi-edge factors.
pub fn build_cond_ind_graph(model: &ModelSpec) -> CondIndGraph {
    let pop = model.population();
    let idx = EdgeIndex::new(pop.n_nodes());
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); idx.total()];
    if model.variant().has_brokerage() {
        for &(a, b) in pop.intersections().keys() {
            let scope = factor_scope(pop, &idx, a, b);
            for &u in &scope {
                for &v in &scope {
                    if u != v {
                        sets[u].insert(v);
                    }
                }
            }
        }
    }
    CondIndGraph {
        index: idx,
        adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
    }
}

/// Neighbors of edge variable `m` computed directly from the population, without
/// building the whole graph.
pub fn dependence_set(model: &ModelSpec, m: usize) -> Result<Vec<usize>> {
    let pop = model.population();
    let idx = EdgeIndex::new(pop.n_nodes());
    let (i, j) = idx.pair(m)?;
    let mut out = BTreeSet::new();
    if model.variant().has_brokerage() {
        let mut scopes = Vec::new();
        if pop.intersection_size(i, j) > 0 {
            scopes.push(factor_scope(pop, &idx, i, j));
        }
        if pop.are_neighbors(i, j) {
            // {i, j} appears as {a, h} in the factor of {a, b} when h ∈ N_a ∩ N_b.
            for (a, h) in [(i, j), (j, i)] {
                for &b in pop.neighborhood(h) {
                    if b != a {
                        scopes.push(factor_scope(pop, &idx, a, b));
                    }
                }
            }
        }
        for s in scopes {
            out.extend(s);
        }
    }
    out.remove(&m);
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionAReport {
    pub max_dependence: usize,
    pub cap: Option<usize>,
    pub bounded: Option<bool>,
}

/// `max_m |𝔑_m|` over all edge variables, optionally compared with a declared cap.
pub fn assumption_a_neighbors(model: &ModelSpec, cap: Option<usize>) -> AssumptionAReport {
    let m = EdgeIndex::new(model.n_nodes()).total();
    let max_dependence = (0..m)
        .map(|e| dependence_set(model, e).map(|s| s.len()).unwrap_or(0))
        .max()
        .unwrap_or(0);
    AssumptionAReport {
        max_dependence,
        cap,
        bounded: cap.map(|c| max_dependence <= c),
    }
}

/// Which independence statement applies to a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    /// `N_i ∩ N_j = ∅`: independent of every other edge.
    EmptyIntersection,
    /// Nonempty intersection and a common subpopulation.
    SharedSubpopulation,
    /// Nonempty intersection, no common subpopulation.
    OverlapOnly,
}

pub fn pair_class(pop: &Population, i: usize, j: usize) -> PairClass {
    if pop.intersection_size(i, j) == 0 {
        PairClass::EmptyIntersection
    } else if pop
        .memberships(i)
        .iter()
        .any(|k| pop.memberships(j).binary_search(k).is_ok())
    {
        PairClass::SharedSubpopulation
    } else {
        PairClass::OverlapOnly
    }
}

/// Edge variables the conditional law of `x_{i,j}` may depend on, per its class.
pub fn conditioning_set(pop: &Population, i: usize, j: usize) -> BTreeSet<usize> {
    let idx = EdgeIndex::new(pop.n_nodes());
    let mut s = BTreeSet::new();
    match pair_class(pop, i, j) {
        PairClass::EmptyIntersection => {}
        PairClass::SharedSubpopulation => {
            let mut nodes: BTreeSet<usize> = pop.neighborhood(i).iter().copied().collect();
            nodes.extend(pop.neighborhood(j).iter().copied());
            let nodes: Vec<usize> = nodes.into_iter().collect();
            for (p, &a) in nodes.iter().enumerate() {
                for &b in &nodes[p + 1..] {
                    s.insert(idx.linear_unchecked(a, b));
                }
            }
        }
        PairClass::OverlapOnly => {
            for &h in pop.intersection(i, j) {
                s.insert(idx.linear_unchecked(i, h));
                s.insert(idx.linear_unchecked(j, h));
            }
        }
    }
    s.remove(&idx.linear_unchecked(i, j));
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondIndViolation {
    /// 1-based pair whose conditional probability moved.
    pub pair: (usize, usize),
    pub class: PairClass,
    /// 1-based edge that was flipped.
    pub flipped: (usize, usize),
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondIndReport {
    pub checks: usize,
    pub max_difference: f64,
    pub violations: Vec<CondIndViolation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CondIndMode {
    /// Every configuration of the other edges; needs `M <= 20`.
    Exhaustive,
    /// Random configurations, each with one random flip outside the conditioning set.
    Randomized { n_checks: usize, seed: u64 },
}

/// Largest `M` accepted by exhaustive verification.
pub const EXHAUSTIVE_COND_IND_CAP: usize = 20;

/// Checks that `P(X_{i,j} = 1 | rest)` is unchanged by flipping any edge outside the
/// pair's conditioning set. Differences above `tol` are reported.
pub fn verify_cond_ind_empirically(
    model: &ModelSpec,
    theta: &Theta,
    pairs: &[(usize, usize)],
    mode: CondIndMode,
    tol: f64,
) -> Result<CondIndReport> {
    theta.check_dim(model)?;
    let pop = model.population();
    let n = pop.n_nodes();
    let idx = EdgeIndex::new(n);
    for &(i, j) in pairs {
        idx.linear(i, j)?;
    }
    let classify = |i: usize, j: usize| {
        if model.variant() == Variant::Beta {
            PairClass::EmptyIntersection
        } else {
            pair_class(pop, i, j)
        }
    };
    let cond_set = |i: usize, j: usize| {
        if model.variant() == Variant::Beta {
            BTreeSet::new()
        } else {
            conditioning_set(pop, i, j)
        }
    };
    let mut report = CondIndReport {
        checks: 0,
        max_difference: 0.0,
        violations: Vec::new(),
    };
    let record = |report: &mut CondIndReport, i: usize, j: usize, e: usize, diff: f64| {
        report.checks += 1;
        report.max_difference = report.max_difference.max(diff);
        if diff > tol {
            let (a, b) = idx.pair_unchecked(e);
            report.violations.push(CondIndViolation {
                pair: (i + 1, j + 1),
                class: classify(i, j),
                flipped: (a + 1, b + 1),
                difference: diff,
            });
        }
    };
    match mode {
        CondIndMode::Exhaustive => {
            let m = idx.total();
            if m > EXHAUSTIVE_COND_IND_CAP {
                return Err(Error::TooLarge {
                    what: "edge variables for exhaustive verification",
                    size: m,
                    cap: EXHAUSTIVE_COND_IND_CAP,
                });
            }
            for &(i, j) in pairs {
                let target = idx.linear_unchecked(i, j);
                let cs = cond_set(i, j);
                let outside: Vec<usize> =
                    (0..m).filter(|e| *e != target && !cs.contains(e)).collect();
                // Configurations of the other edges, with x_{i,j} = 0.
                let mut state = GraphState::new(model, Graph::empty(n));
                let others: Vec<usize> = (0..m).filter(|&e| e != target).collect();
                for k in 0u64..(1u64 << others.len()) {
                    if k > 0 {
                        state.flip_linear(others[k.trailing_zeros() as usize]);
                    }
                    let base = state.conditional_prob(theta, i, j);
                    for &e in &outside {
                        state.flip_linear(e);
                        let p = state.conditional_prob(theta, i, j);
                        state.flip_linear(e);
                        record(&mut report, i, j, e, (p - base).abs());
                    }
                }
            }
        }
        CondIndMode::Randomized { n_checks, seed } => {
            if pairs.is_empty() {
                return Ok(report);
            }
            let m = idx.total();
            let mut rng = stream(seed, 0, 0);
            let mut state = GraphState::new(model, Graph::empty(n));
            for _ in 0..n_checks {
                let (i, j) = pairs[rng.random_range(0..pairs.len())];
                let target = idx.linear_unchecked(i, j);
                let cs = cond_set(i, j);
                if cs.len() + 1 >= m {
                    continue;
                }
                for e in 0..m {
                    let want = rng.random::<f64>() < 0.5;
                    if state.graph().get_linear(e) != want {
                        state.flip_linear(e);
                    }
                }
                let e = loop {
                    let e = rng.random_range(0..m);
                    if e != target && !cs.contains(&e) {
                        break e;
                    }
                };
                let base = state.conditional_prob(theta, i, j);
                state.flip_linear(e);
                let p = state.conditional_prob(theta, i, j);
                record(&mut report, i, j, e, (p - base).abs());
            }
        }
    }
    Ok(report)
}

/// Largest `M` for [`mixed_difference_check`].
pub const MIXED_DIFFERENCE_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedDifferenceReport {
    /// Largest `|Δ_u Δ_v ln f|` over non-adjacent pairs and all completions.
    pub max_nonadjacent: f64,
    /// Number of adjacent pairs with a nonzero mixed difference somewhere.
    pub adjacent_with_interaction: usize,
    pub adjacent_pairs: usize,
}

/// For every pair of edge variables and every configuration of the rest, the mixed
/// second difference `f(11) − f(10) − f(01) + f(00)` of the log-density.
pub fn mixed_difference_check(
    model: &ModelSpec,
    theta: &Theta,
    cig: &CondIndGraph,
) -> Result<MixedDifferenceReport> {
    theta.check_dim(model)?;
    let n = model.n_nodes();
    let m = EdgeIndex::new(n).total();
    if m > MIXED_DIFFERENCE_CAP {
        return Err(Error::TooLarge {
            what: "edge variables for mixed differences",
            size: m,
            cap: MIXED_DIFFERENCE_CAP,
        });
    }
    let mut logf = vec![0.0; 1usize << m];
    let mut state = GraphState::new(model, Graph::empty(n));
    for k in 0u64..(1u64 << m) {
        if k > 0 {
            state.flip_linear(k.trailing_zeros() as usize);
        }
        logf[(k ^ (k >> 1)) as usize] = state.log_unnormalized_density(theta);
    }
    let mut max_nonadjacent: f64 = 0.0;
    let mut adjacent_with_interaction = 0;
    let mut adjacent_pairs = 0;
    for u in 0..m {
        for v in u + 1..m {
            let (bu, bv) = (1usize << u, 1usize << v);
            let mut largest: f64 = 0.0;
            for code in 0..(1usize << m) {
                if code & (bu | bv) != 0 {
                    continue;
                }
                let d = logf[code | bu | bv] - logf[code | bu] - logf[code | bv] + logf[code];
                largest = largest.max(d.abs());
            }
            if cig.adjacent(u, v) {
                adjacent_pairs += 1;
                if largest > 1e-12 {
                    adjacent_with_interaction += 1;
                }
            } else {
                max_nonadjacent = max_nonadjacent.max(largest);
            }
        }
    }
    Ok(MixedDifferenceReport {
        max_nonadjacent,
        adjacent_with_interaction,
        adjacent_pairs,
    })
}
