//! Analytic dependence bounds: `π*`, the smoothness bound `Ψ`, per-entry percolation
//! bounds on the coupling matrix and the assembled norm bound.

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;
use statrs::function::gamma::{checked_gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::models::{ModelSpec, Theta, Variant};
use crate::rng::stream;
use crate::state::GraphState;

use super::cond_ind::CondIndGraph;
use super::subpop::{check_b1, B1Params, SubpopGraph};

/// 0 for the beta model, `1 / (1 + exp(−(3 + 2D) ‖θ‖∞))` otherwise.
pub fn pi_star_bound(model: &ModelSpec, theta: &Theta) -> f64 {
    if model.variant() == Variant::Beta {
        return 0.0;
    }
    let d = model.population().max_neighborhood() as f64;
    1.0 / (1.0 + (-(3.0 + 2.0 * d) * theta.sup_norm()).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiReport {
    /// `√N` for beta, `max{1, 3D²} √N` otherwise.
    pub bound: f64,
    /// Largest change of the unweighted brokered-edge count seen over random single flips.
    pub empirical_max_brokerage_change: u32,
    /// `2D + 1`.
    pub brokerage_lipschitz_limit: usize,
    pub flips_examined: usize,
}

pub fn psi_bound_value(model: &ModelSpec) -> f64 {
    let sqrt_n = (model.n_nodes() as f64).sqrt();
    if model.variant() == Variant::Beta {
        sqrt_n
    } else {
        let d = model.population().max_neighborhood() as f64;
        (3.0 * d * d).max(1.0) * sqrt_n
    }
}

/// The analytic `Ψ` bound plus an empirical scan of single-flip brokerage sensitivity
/// over `n_graphs` random graphs of edge density `density`.
pub fn psi_bound(model: &ModelSpec, n_graphs: usize, density: f64, seed: u64) -> PsiReport {
    let n = model.n_nodes();
    let d = model.population().max_neighborhood();
    let mut rng = stream(seed, 0, 0);
    let mut max_change = 0;
    let mut flips = 0;
    if model.variant().has_brokerage() {
        for _ in 0..n_graphs {
            let mut g = Graph::empty(n);
            for m in 0..g.n_edge_vars() {
                g.set_linear(m, rng.random::<f64>() < density);
            }
            let state = GraphState::new(model, g);
            for (i, j) in state.graph().index().pairs() {
                max_change = max_change.max(state.delta(i, j).brokered);
                flips += 1;
            }
        }
    }
    PsiReport {
        bound: psi_bound_value(model),
        empirical_max_brokerage_change: max_change,
        brokerage_lipschitz_limit: 2 * d + 1,
        flips_examined: flips,
    }
}

/// BFS layers from `i` in the conditional-independence graph restricted to vertices
/// `>= i`. `dist[j]` is `None` when `j` is unreachable in that subgraph.
fn restricted_distances(cig: &CondIndGraph, i: usize) -> Vec<Option<usize>> {
    let m = cig.n_vertices();
    let mut dist = vec![None; m];
    dist[i] = Some(0);
    let mut q = VecDeque::from([i]);
    while let Some(v) = q.pop_front() {
        let dv = dist[v].unwrap_or(0);
        for &w in cig.neighbors(v) {
            if w > i && dist[w].is_none() {
                dist[w] = Some(dv + 1);
                q.push_back(w);
            }
        }
    }
    dist
}

/// Per-entry percolation bounds: for `j > i` at restricted distance `d`,
/// `π* · Π_{l=1}^{d−1} (1 − (1 − π*)^{|V_l|})` with `V_l` the `l`-th BFS layer from `i`;
/// 0 when `j` is unreachable. The matrix is upper triangular with unit diagonal.
pub fn percolation_entry_bounds(cig: &CondIndGraph, pi_star: f64) -> Vec<Vec<f64>> {
    let m = cig.n_vertices();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        out[i][i] = 1.0;
        let dist = restricted_distances(cig, i);
        let depth = dist.iter().flatten().copied().max().unwrap_or(0);
        let mut layer = vec![0usize; depth + 1];
        for d in dist.iter().flatten() {
            layer[*d] += 1;
        }
        // prefix[d] = Π_{l=1}^{d-1} (1 - (1 - π*)^{|V_l|})
        let mut prefix = vec![1.0; depth + 1];
        for d in 2..=depth {
            prefix[d] = prefix[d - 1] * (1.0 - (1.0 - pi_star).powi(layer[d - 1] as i32));
        }
        for j in i + 1..m {
            if let Some(d) = dist[j] {
                out[i][j] = pi_star * prefix[d];
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assumption {
    B1 { omega1: f64, omega2: f64 },
    B2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingNormBound {
    pub assumption: Assumption,
    pub pi_star: f64,
    /// Upper bound on the spectral norm of the coupling matrix.
    pub value: f64,
    /// Terms summed explicitly before the tail bound took over.
    pub terms: usize,
    pub tail_bound: f64,
    /// `√(N / ln N)`, for side-by-side comparison with `value`.
    pub threshold_sqrt_n_over_log_n: f64,
}

/// Upper bound on `|||𝒟|||₂` under a structural assumption.
///
/// B.1: `1 + Σ_k (ω₁' + ω₂ ln k) exp(−A k^{1 − ω₂ c})` with `c = |ln(1 − π*)|`,
/// `ω₁' = 8D² ω₁` and `A = exp(−ω₁' c)`. Terms are summed until they drop below
/// `1e-15` on the decreasing part of the series; the remainder is bounded by the smaller
/// of the dominating `k^{-2}` series and an incomplete-gamma integral.
///
/// B.2: the tree's largest observed layer `g` gives
/// `1 + 2D² g r / (1 − r)` with `r = 1 − (1 − π*)^{2D²}` and `D >= 2`.
pub fn coupling_norm_bound(
    model: &ModelSpec,
    theta: &Theta,
    assumption: Assumption,
) -> Result<CouplingNormBound> {
    theta.check_dim(model)?;
    let n = model.n_nodes() as f64;
    let threshold = if n > 1.0 {
        (n / n.ln()).sqrt()
    } else {
        f64::INFINITY
    };
    let pi_star = pi_star_bound(model, theta);
    let mut out = CouplingNormBound {
        assumption,
        pi_star,
        value: 1.0,
        terms: 0,
        tail_bound: 0.0,
        threshold_sqrt_n_over_log_n: threshold,
    };
    if model.variant() == Variant::Beta {
        return Ok(out);
    }
    let pop = model.population();
    let sg = SubpopGraph::new(pop);
    let layers = sg.max_layer_sizes();
    let c = -(1.0 - pi_star).ln();
    match assumption {
        Assumption::B1 { omega1, omega2 } => {
            if !(omega1 >= 0.0 && omega2 >= 0.0) {
                return Err(Error::AssumptionViolated(format!(
                    "B.1 needs omega1, omega2 >= 0, got ({omega1}, {omega2})"
                )));
            }
            if omega2 * c >= 1.0 {
                return Err(Error::AssumptionViolated(format!(
                    "B.1 needs omega2 < 1/|ln(1 - pi*)| = {}, got {omega2}",
                    1.0 / c
                )));
            }
            let d = pop.max_neighborhood();
            let check = check_b1(&layers, d, B1Params { omega1, omega2 });
            if !check.raw_holds {
                return Err(Error::AssumptionViolated(format!(
                    "B.1 layer envelope fails at distances {:?}",
                    check.raw_violations
                )));
            }
            let w1 = 8.0 * (d as f64).powi(2) * omega1;
            let (sum, terms, tail) = b1_series(w1, omega2, c);
            out.value = 1.0 + sum + tail;
            out.terms = terms;
            out.tail_bound = tail;
        }
        Assumption::B2 => {
            if !sg.is_tree() {
                return Err(Error::AssumptionViolated(
                    "B.2 needs the subpopulation graph to be a tree".into(),
                ));
            }
            let d = pop.max_neighborhood().max(2) as f64;
            let g = layers.iter().copied().max().unwrap_or(0).max(1) as f64;
            // q = 1 − r, kept separate so r/(1 − r) survives r rounding to 1.
            let q = (2.0 * d * d * (-pi_star).ln_1p()).exp();
            out.value = if q > 0.0 {
                1.0 + 2.0 * d * d * g * (1.0 - q) / q
            } else {
                f64::INFINITY
            };
        }
    }
    Ok(out)
}

/// Returns `(Σ_{k<=K} term_k, K, tail bound for k > K)`.
fn b1_series(w1: f64, omega2: f64, c: f64) -> (f64, usize, f64) {
    let a = (-w1 * c).exp();
    let beta = 1.0 - omega2 * c;
    let term = |k: f64| (w1 + omega2 * k.ln()) * (-a * k.powf(beta)).exp();
    // On k >= k0 the log-derivative ω₂/(k (w₁ + ω₂ ln k)) − A β k^{β−1} is negative.
    let decreasing = |k: f64| {
        omega2 / (k * (w1 + omega2 * k.ln()).max(f64::MIN_POSITIVE)) < a * beta * k.powf(beta - 1.0)
    };
    let mut sum = 0.0;
    let mut k = 1usize;
    const MAX_TERMS: usize = 1_000_000;
    loop {
        let t = term(k as f64);
        sum += t;
        if (t < 1e-15 && decreasing(k as f64)) || k >= MAX_TERMS {
            break;
        }
        k += 1;
    }
    let kf = k as f64;
    // Dominating series: (w₁ + ω₂) u!/A^u Σ_{j>K} j^{-2} <= (w₁ + ω₂) u!/A^u / K.
    let u = (3.0 / beta).ceil();
    let log_dom = (w1 + omega2).ln() + ln_gamma(u + 1.0) - u * a.ln() - kf.ln();
    let dominating = log_dom.exp();
    // Integral: Σ_{j>K} term_j <= ∫_K^∞ (w₁ + ω₂) x e^{−A x^β} dx
    //   = (w₁ + ω₂)/β · A^{−2/β} · Γ(2/β, A K^β).
    let s = 2.0 / beta;
    let x = a * kf.powf(beta);
    let integral = ((w1 + omega2).ln() - beta.ln() - s * a.ln() + ln_gamma(s)).exp()
        * checked_gamma_ur(s, x).unwrap_or(f64::NAN);
    let tail = [dominating, integral]
        .into_iter()
        .filter(|v| v.is_finite() && *v >= 0.0)
        .fold(f64::INFINITY, f64::min);
    (sum, k, if w1 + omega2 == 0.0 { 0.0 } else { tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::cond_ind::build_cond_ind_graph;
    use crate::population::Population;

    #[test]
    fn pi_star_values() {
        let pop = Population::chain(3, 3);
        let beta = ModelSpec::beta(pop.clone());
        assert_eq!(
            pi_star_bound(&beta, &Theta::new(vec![1.0; 7], None).unwrap()),
            0.0
        );
        let b = ModelSpec::brokerage(pop);
        assert_eq!(pi_star_bound(&b, &Theta::zeros(&b)), 0.5);
    }

    #[test]
    fn psi_values() {
        let beta = ModelSpec::beta(Population::single(100));
        assert_eq!(psi_bound_value(&beta), 10.0);
        let subpops: Vec<Vec<usize>> = (0..50)
            .map(|k| vec![2 * k, 2 * k + 1, (2 * k + 2) % 100])
            .collect();
        let pop = Population::new(&subpops, 100).unwrap();
        let d = pop.max_neighborhood();
        let m = ModelSpec::brokerage(pop);
        assert!((psi_bound_value(&m) - 3.0 * (d * d) as f64 * 10.0).abs() < 1e-9);
        let r = psi_bound(&m, 3, 0.5, 1);
        assert!(r.empirical_max_brokerage_change as usize <= r.brokerage_lipschitz_limit);
    }

    #[test]
    fn beta_norm_bound_is_one() {
        let m = ModelSpec::beta(Population::chain(4, 3));
        let th = Theta::new(vec![0.4; 9], None).unwrap();
        for a in [
            Assumption::B2,
            Assumption::B1 {
                omega1: 2.0,
                omega2: 0.0,
            },
        ] {
            assert_eq!(coupling_norm_bound(&m, &th, a).unwrap().value, 1.0);
        }
    }

    #[test]
    fn chain_b2_finite_and_monotone() {
        let m = ModelSpec::brokerage(Population::chain(5, 3));
        let at = |t: f64| {
            let mut th = Theta::zeros(&m);
            th.degree[0] = t;
            coupling_norm_bound(&m, &th, Assumption::B2).unwrap().value
        };
        let b0 = at(0.0);
        assert!(b0.is_finite() && b0 >= 1.0);
        assert!(b0 <= at(1.0));
    }

    #[test]
    fn cycle_violates_b2() {
        let pop = Population::new(&[vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 0]], 6).unwrap();
        let m = ModelSpec::brokerage(pop);
        assert!(matches!(
            coupling_norm_bound(&m, &Theta::zeros(&m), Assumption::B2),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn b1_series_matches_long_direct_sum() {
        let (w1, omega2, c) = (0.5, 0.8, 0.69);
        let (s, k, tail) = b1_series(w1, omega2, c);
        let a = (-w1 * c).exp();
        let beta = 1.0 - omega2 * c;
        let direct: f64 = (1..2_000_000)
            .map(|k| {
                let k = k as f64;
                (w1 + omega2 * k.ln()) * (-a * k.powf(beta)).exp()
            })
            .sum();
        assert!(k > 1);
        assert!(s <= direct + 1e-9);
        assert!(s + tail >= direct - 1e-9);
    }

    #[test]
    fn entry_bounds_shape() {
        let m = ModelSpec::brokerage(Population::chain(2, 3));
        let cig = build_cond_ind_graph(&m);
        let b = percolation_entry_bounds(&cig, 0.6);
        for (i, row) in b.iter().enumerate() {
            assert_eq!(row[i], 1.0);
            for j in 0..i {
                assert_eq!(row[j], 0.0);
            }
            for &v in &row[i + 1..] {
                assert!((0.0..=0.6).contains(&v));
            }
        }
    }
}
