//! Graph plus dense caches that keep single-edge statistic changes at `O(D)`.

use crate::graph::Graph;
use crate::math::logistic;
use crate::models::{EdgeDelta, ModelSpec, SuffStats, Theta};

/// A graph bound to a model, with the shared-partner counts
/// `partners[a][b] = #{h ∈ N_a ∩ N_b : x_{a,h} = x_{b,h} = 1}` kept current under flips.
#[derive(Debug, Clone)]
pub struct GraphState<'a> {
    model: &'a ModelSpec,
    graph: Graph,
    n: usize,
    dependent: bool,
    neighbor: Vec<bool>,
    inter_size: Vec<u32>,
    weight: Vec<f64>,
    partners: Vec<u32>,
    degrees: Vec<usize>,
    /// Brokered pairs, bucketed by intersection size.
    brokered_by_size: Vec<u64>,
    /// Present edges whose endpoints have an empty intersection.
    empty_edges: usize,
}

impl<'a> GraphState<'a> {
    pub fn new(model: &'a ModelSpec, graph: Graph) -> Self {
        let pop = model.population();
        let n = pop.n_nodes();
        assert_eq!(graph.n_nodes(), n, "graph and model disagree on N");
        let mut neighbor = vec![false; n * n];
        for i in 0..n {
            for &j in pop.neighborhood(i) {
                neighbor[i * n + j] = true;
            }
        }
        let mut inter_size = vec![0u32; n * n];
        let mut weight = vec![0.0; n * n];
        for (&(i, j), members) in pop.intersections() {
            let s = members.len() as u32;
            let w = model.size_weight(members.len());
            for (a, b) in [(i, j), (j, i)] {
                inter_size[a * n + b] = s;
                weight[a * n + b] = w;
            }
        }
        let mut state = Self {
            model,
            graph: Graph::empty(n),
            n,
            dependent: model.variant().has_brokerage(),
            neighbor,
            inter_size,
            weight,
            partners: vec![0; n * n],
            degrees: vec![0; n],
            brokered_by_size: vec![0; pop.max_neighborhood() + 1],
            empty_edges: 0,
        };
        let edges: Vec<_> = graph.edges().collect();
        for (i, j) in edges {
            state.flip(i, j);
        }
        debug_assert_eq!(state.graph, graph);
        state
    }

    pub fn model(&self) -> &'a ModelSpec {
        self.model
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.graph.has_edge(i, j)
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Unweighted number of brokered edges.
    pub fn brokered(&self) -> u64 {
        self.brokered_by_size.iter().sum()
    }

    pub fn brokered_by_size(&self) -> &[u64] {
        &self.brokered_by_size
    }

    /// Present edges between nodes with an empty neighborhood intersection.
    pub fn empty_intersection_edges(&self) -> usize {
        self.empty_edges
    }

    /// The brokerage coordinate, recomputed from the per-size counts.
    pub fn brokerage_stat(&self) -> f64 {
        self.brokered_by_size
            .iter()
            .enumerate()
            .map(|(s, &c)| c as f64 * self.model.size_weight(s))
            .sum()
    }

    pub fn suff_stats(&self) -> SuffStats {
        SuffStats {
            degrees: self.degrees.clone(),
            brokered: self.brokered() as usize,
            brokerage: self.dependent.then(|| self.brokerage_stat()),
        }
    }

    /// `ln a(x)` from the maintained edge count.
    pub fn log_reference(&self) -> f64 {
        self.empty_edges as f64 * self.model.pair_log_reference(0)
    }

    /// `⟨θ, s(x)⟩ + ln a(x)`.
    pub fn log_unnormalized_density(&self, theta: &Theta) -> f64 {
        let mut v: f64 = self
            .degrees
            .iter()
            .zip(&theta.degree)
            .map(|(&d, t)| d as f64 * t)
            .sum();
        if self.dependent {
            v += theta.brokerage_or_zero() * self.brokerage_stat();
        }
        v + self.log_reference()
    }

    #[inline]
    fn x(&self, a: usize, b: usize) -> u32 {
        u32::from(self.graph.has_edge(a, b))
    }

    /// Statistic change of toggling `x_{i,j}` on with all other edges fixed.
    pub fn delta(&self, i: usize, j: usize) -> EdgeDelta {
        let n = self.n;
        let size = self.inter_size[i * n + j] as usize;
        let mut d = EdgeDelta {
            log_reference: self.model.pair_log_reference(size),
            ..EdgeDelta::default()
        };
        if !self.dependent {
            return d;
        }
        if size > 0 && self.partners[i * n + j] > 0 {
            d.brokered += 1;
            d.brokerage += self.weight[i * n + j];
        }
        if self.neighbor[i * n + j] {
            let xij = self.x(i, j);
            let pop = self.model.population();
            // Pairs {i, c} with j in N_i ∩ N_c, and symmetrically {j, c}.
            for (u, v) in [(i, j), (j, i)] {
                for &c in pop.neighborhood(v) {
                    if c != u && self.graph.has_edge(u, c) && self.graph.has_edge(c, v) {
                        // `x_{c,v} = 1`, so the current count includes `h = v` iff `x_{u,v} = 1`.
                        if self.partners[u * n + c] - xij == 0 {
                            d.brokered += 1;
                            d.brokerage += self.weight[u * n + c];
                        }
                    }
                }
            }
        }
        d
    }

    /// `P(X_{i,j} = 1 | rest)`.
    pub fn conditional_prob(&self, theta: &Theta, i: usize, j: usize) -> f64 {
        logistic(self.delta(i, j).logit(theta, i, j))
    }

    /// Sets `x_{i,j}`, returning whether it changed.
    pub fn set(&mut self, i: usize, j: usize, value: bool) -> bool {
        if self.graph.has_edge(i, j) != value {
            self.flip(i, j);
            true
        } else {
            false
        }
    }

    pub fn flip(&mut self, i: usize, j: usize) {
        debug_assert!(i != j);
        let n = self.n;
        let adding = !self.graph.has_edge(i, j);
        if self.dependent {
            let mut changed: Vec<usize> = Vec::new();
            let size = self.inter_size[i * n + j] as usize;
            if size > 0 && self.partners[i * n + j] > 0 {
                changed.push(size);
            }
            if self.neighbor[i * n + j] {
                let xij = u32::from(!adding);
                let pop = self.model.population();
                for (u, v) in [(i, j), (j, i)] {
                    for &c in pop.neighborhood(v) {
                        if c == u || !self.graph.has_edge(c, v) {
                            continue;
                        }
                        if self.graph.has_edge(u, c) && self.partners[u * n + c] - xij == 0 {
                            changed.push(self.inter_size[u * n + c] as usize);
                        }
                        let p = &mut self.partners[u * n + c];
                        if adding {
                            *p += 1;
                        } else {
                            *p -= 1;
                        }
                        self.partners[c * n + u] = self.partners[u * n + c];
                    }
                }
            }
            for s in changed {
                if adding {
                    self.brokered_by_size[s] += 1;
                } else {
                    self.brokered_by_size[s] -= 1;
                }
            }
        }
        if self.inter_size[i * n + j] == 0 {
            if adding {
                self.empty_edges += 1;
            } else {
                self.empty_edges -= 1;
            }
        }
        if adding {
            self.degrees[i] += 1;
            self.degrees[j] += 1;
        } else {
            self.degrees[i] -= 1;
            self.degrees[j] -= 1;
        }
        let m = self.graph.index().linear_unchecked(i, j);
        self.graph.flip_linear(m);
    }

    pub fn flip_linear(&mut self, m: usize) {
        let (i, j) = self.graph.index().pair_unchecked(m);
        self.flip(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{edge_delta, suff_stats, Variant};
    use crate::population::Population;

    fn models() -> Vec<ModelSpec> {
        let pops = [
            Population::single(5),
            Population::new(&[vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![4, 5, 6]], 7).unwrap(),
            Population::new(&[vec![0, 1, 2, 3], vec![2, 3, 4, 5], vec![5, 6, 0]], 7).unwrap(),
        ];
        let mut out = Vec::new();
        for p in pops {
            for v in [
                Variant::Beta,
                Variant::Brokerage,
                Variant::SparseBrokerage { alpha: 0.3 },
                Variant::SizeDependent,
            ] {
                out.push(ModelSpec::new(v, p.clone()).unwrap());
            }
        }
        out
    }

    #[test]
    fn incremental_matches_rescan_along_random_walk() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for model in models() {
            let n = model.n_nodes();
            let mut st = GraphState::new(&model, Graph::empty(n));
            for _ in 0..400 {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let d = st.delta(i, j);
                let slow = edge_delta(st.graph(), i, j, &model);
                assert_eq!(d.brokered, slow.brokered);
                assert!((d.brokerage - slow.brokerage).abs() < 1e-12);
                assert_eq!(d.log_reference, slow.log_reference);
                st.flip(i, j);
                let s = suff_stats(st.graph(), &model);
                assert_eq!(st.degrees(), &s.degrees[..]);
                assert_eq!(st.brokered() as usize, s.brokered);
                if let Some(b) = s.brokerage {
                    assert!((st.brokerage_stat() - b).abs() < 1e-12);
                }
            }
            let rebuilt = GraphState::new(&model, st.graph().clone());
            assert_eq!(rebuilt.partners, st.partners);
        }
    }
}
