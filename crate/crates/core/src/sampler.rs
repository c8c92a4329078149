//! Exact sampling for the beta model, single-site Gibbs sampling for every variant, and
//! exhaustive enumeration for tiny graphs.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::math::logistic;
use crate::models::{edge_delta, ModelSpec, Theta, Variant};
use crate::rng::stream;
use crate::state::GraphState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    #[default]
    SystematicLexicographic,
    RandomPermutationPerSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub burn_in_sweeps: usize,
    pub sweeps_between_samples: usize,
    pub seed: u64,
    pub scan_order: ScanOrder,
    /// Stream coordinates, so replications and chains sharing a seed never overlap.
    #[serde(default)]
    pub replication: u64,
    #[serde(default)]
    pub chain: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in_sweeps: 50,
            sweeps_between_samples: 5,
            seed: 0,
            scan_order: ScanOrder::SystematicLexicographic,
            replication: 0,
            chain: 0,
        }
    }
}

impl GibbsConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sweeps_between_samples == 0 {
            return Err(Error::InvalidInput(
                "sweeps_between_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Each edge independently `Bernoulli(logistic(θ_i + θ_j))`.
pub fn sample_beta_exact(theta: &Theta, model: &ModelSpec, seed: u64) -> Result<Graph> {
    if model.variant() != Variant::Beta {
        return Err(Error::WrongVariant {
            expected: "beta",
            got: model.variant().name(),
        });
    }
    theta.check_dim(model)?;
    let mut rng = stream(seed, 0, 0);
    let mut g = Graph::empty(model.n_nodes());
    for m in 0..g.n_edge_vars() {
        let (i, j) = g.index().pair_unchecked(m);
        let p = logistic(theta.degree[i] + theta.degree[j]);
        if rng.random::<f64>() < p {
            g.set_linear(m, true);
        }
    }
    Ok(g)
}

/// Single-site Gibbs sampler started from the empty graph.
pub struct GibbsChain<'a> {
    state: GraphState<'a>,
    theta: &'a Theta,
    rng: rand_chacha::ChaCha8Rng,
    order: Vec<usize>,
    scan: ScanOrder,
}

impl<'a> GibbsChain<'a> {
    pub fn new(theta: &'a Theta, model: &'a ModelSpec, cfg: &GibbsConfig) -> Result<Self> {
        Self::from_graph(theta, model, cfg, Graph::empty(model.n_nodes()))
    }

    pub fn from_graph(
        theta: &'a Theta,
        model: &'a ModelSpec,
        cfg: &GibbsConfig,
        start: Graph,
    ) -> Result<Self> {
        cfg.validate()?;
        theta.check_dim(model)?;
        let m = start.n_edge_vars();
        Ok(Self {
            state: GraphState::new(model, start),
            theta,
            rng: stream(cfg.seed, cfg.replication, cfg.chain),
            order: (0..m).collect(),
            scan: cfg.scan_order,
        })
    }

    /// One pass over all edge variables.
    pub fn sweep(&mut self) {
        if self.scan == ScanOrder::RandomPermutationPerSweep {
            self.order.shuffle(&mut self.rng);
        }
        for k in 0..self.order.len() {
            let (i, j) = self.state.graph().index().pair_unchecked(self.order[k]);
            let p = self.state.conditional_prob(self.theta, i, j);
            let u: f64 = self.rng.random();
            self.state.set(i, j, u < p);
        }
    }

    pub fn state(&self) -> &GraphState<'a> {
        &self.state
    }

    pub fn graph(&self) -> &Graph {
        self.state.graph()
    }
}

/// Runs burn-in, then calls `visit` on `n_samples` states spaced by the configured sweeps.
pub fn gibbs_run<F>(
    theta: &Theta,
    model: &ModelSpec,
    cfg: &GibbsConfig,
    n_samples: usize,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&GraphState<'_>),
{
    let mut chain = GibbsChain::new(theta, model, cfg)?;
    for _ in 0..cfg.burn_in_sweeps {
        chain.sweep();
    }
    for _ in 0..n_samples {
        for _ in 0..cfg.sweeps_between_samples {
            chain.sweep();
        }
        visit(chain.state());
    }
    Ok(())
}

pub fn gibbs_sample(
    theta: &Theta,
    model: &ModelSpec,
    cfg: &GibbsConfig,
    n_samples: usize,
) -> Result<Vec<Graph>> {
    let mut out = Vec::with_capacity(n_samples);
    gibbs_run(theta, model, cfg, n_samples, |s| {
        out.push(s.graph().clone())
    })?;
    Ok(out)
}

/// Hard cap on the number of edge variables for [`enumerate_exact`].
pub const ENUMERATION_CAP: usize = 28;
/// Largest `M` for which the full distribution may be retained.
pub const DISTRIBUTION_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    /// `ψ(θ)`.
    pub log_normalizer: f64,
    /// `E_θ s(X)`.
    pub mean_suff_stats: Vec<f64>,
    /// Expected unweighted number of brokered edges.
    pub mean_brokerage: f64,
    /// Expected number of present edges whose endpoints have an empty intersection.
    pub mean_empty_intersection_edges: f64,
    /// Probability of each graph, indexed by its edge bitmask ([`Graph::code`]).
    #[serde(skip)]
    pub distribution: Option<Vec<f64>>,
}

impl EnumerationResult {
    pub fn prob(&self, g: &Graph) -> Option<f64> {
        self.distribution.as_ref().map(|d| d[g.code() as usize])
    }
}

/// Exact `ψ` and moments by visiting all `2^M` graphs. The distribution is retained
/// when `M <= 16`.
pub fn enumerate_exact(theta: &Theta, model: &ModelSpec) -> Result<EnumerationResult> {
    let m = model.n_nodes() * model.n_nodes().saturating_sub(1) / 2;
    enumerate_exact_with(theta, model, m <= 16)
}

pub fn enumerate_exact_with(
    theta: &Theta,
    model: &ModelSpec,
    retain_distribution: bool,
) -> Result<EnumerationResult> {
    theta.check_dim(model)?;
    let n = model.n_nodes();
    let m = n * n.saturating_sub(1) / 2;
    if m > ENUMERATION_CAP {
        return Err(Error::TooLarge {
            what: "edge variables for enumeration",
            size: m,
            cap: ENUMERATION_CAP,
        });
    }
    if retain_distribution && m > DISTRIBUTION_CAP {
        return Err(Error::TooLarge {
            what: "edge variables for a retained distribution",
            size: m,
            cap: DISTRIBUTION_CAP,
        });
    }
    let p = model.dim();
    let mut state = GraphState::new(model, Graph::empty(n));
    let mut logw = retain_distribution.then(|| vec![0.0f64; 1usize << m]);

    // Streaming log-sum-exp: all accumulators are scaled by e^{-max}.
    let mut max = f64::NEG_INFINITY;
    let mut total = 0.0;
    let mut acc = vec![0.0; p + 2];
    let mut stats = vec![0.0; p + 2];
    let total_states: u64 = 1u64 << m;
    for k in 0..total_states {
        if k > 0 {
            state.flip_linear(k.trailing_zeros() as usize);
        }
        let lw = state.log_unnormalized_density(theta);
        if let Some(v) = logw.as_mut() {
            v[(k ^ (k >> 1)) as usize] = lw;
        }
        if lw > max {
            let scale = (max - lw).exp();
            total *= scale;
            acc.iter_mut().for_each(|a| *a *= scale);
            max = lw;
        }
        let w = (lw - max).exp();
        total += w;
        for (s, &d) in stats.iter_mut().zip(state.degrees()) {
            *s = d as f64;
        }
        if p > n {
            stats[n] = state.brokerage_stat();
        }
        stats[p] = state.brokered() as f64;
        stats[p + 1] = state.empty_intersection_edges() as f64;
        for (a, s) in acc.iter_mut().zip(&stats) {
            *a += w * s;
        }
    }
    let log_normalizer = max + total.ln();
    let distribution = logw.map(|v| {
        v.into_iter()
            .map(|lw| (lw - log_normalizer).exp())
            .collect()
    });
    Ok(EnumerationResult {
        log_normalizer,
        mean_suff_stats: acc[..p].iter().map(|a| a / total).collect(),
        mean_brokerage: acc[p] / total,
        mean_empty_intersection_edges: acc[p + 1] / total,
        distribution,
    })
}

/// Largest `M` for which [`systematic_scan_kernel`] builds the dense kernel.
pub const KERNEL_CAP: usize = 12;

/// Dense transition matrix of one systematic lexicographic sweep, rows indexed by
/// edge bitmask.
pub fn systematic_scan_kernel(theta: &Theta, model: &ModelSpec) -> Result<Vec<Vec<f64>>> {
    theta.check_dim(model)?;
    let n = model.n_nodes();
    let m = n * n.saturating_sub(1) / 2;
    if m > KERNEL_CAP {
        return Err(Error::TooLarge {
            what: "edge variables for a dense kernel",
            size: m,
            cap: KERNEL_CAP,
        });
    }
    let states = 1usize << m;
    // p1[site][code] = P(X_site = 1 | rest of code).
    let mut p1 = vec![vec![0.0; states]; m];
    for code in 0..states {
        let g = Graph::from_code(n, code as u64);
        for (site, row) in p1.iter_mut().enumerate() {
            let (i, j) = g.index().pair_unchecked(site);
            row[code] = logistic(edge_delta(&g, i, j, model).logit(theta, i, j));
        }
    }
    let mut kernel = vec![vec![0.0; states]; states];
    let mut next = vec![0.0; states];
    for (start, row) in kernel.iter_mut().enumerate() {
        row[start] = 1.0;
        for (site, probs) in p1.iter().enumerate() {
            next.iter_mut().for_each(|v| *v = 0.0);
            let bit = 1usize << site;
            for (code, &mass) in row.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let q = probs[code];
                next[code | bit] += mass * q;
                next[code & !bit] += mass * (1.0 - q);
            }
            std::mem::swap(row, &mut next);
        }
    }
    Ok(kernel)
}

/// Stationary law of a row-stochastic matrix by power iteration from the uniform law.
pub fn stationary_distribution(kernel: &[Vec<f64>], tol: f64, max_iter: usize) -> Vec<f64> {
    let s = kernel.len();
    let mut pi = vec![1.0 / s as f64; s];
    let mut next = vec![0.0; s];
    for _ in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (row, &mass) in kernel.iter().zip(&pi) {
            for (nv, &k) in next.iter_mut().zip(row) {
                *nv += mass * k;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change < tol {
            break;
        }
    }
    pi
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
