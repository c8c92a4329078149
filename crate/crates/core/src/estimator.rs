//! Pseudo-loglikelihood with exact derivatives, the damped-Newton MPLE solver, and an
//! independent fixed-point MLE for the beta model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::math::{logistic, softplus, sup_norm};
use crate::models::{ModelSpec, Theta, Variant};
use crate::state::GraphState;

/// The per-edge quantities the pseudo-likelihood needs; none depend on `θ`.
#[derive(Debug, Clone)]
pub struct PseudoData {
    n: usize,
    dim: usize,
    terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    i: u32,
    j: u32,
    x: bool,
    db: f64,
    lr: f64,
}

impl PseudoData {
    pub fn new(g: &Graph, model: &ModelSpec) -> Self {
        let state = GraphState::new(model, g.clone());
        let terms = g
            .index()
            .pairs()
            .map(|(i, j)| {
                let d = state.delta(i, j);
                Term {
                    i: i as u32,
                    j: j as u32,
                    x: g.has_edge(i, j),
                    db: d.brokerage,
                    lr: d.log_reference,
                }
            })
            .collect();
        Self {
            n: model.n_nodes(),
            dim: model.dim(),
            terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn logit(&self, t: &Term, theta: &[f64]) -> f64 {
        let b = if self.dim > self.n {
            theta[self.n] * t.db
        } else {
            0.0
        };
        theta[t.i as usize] + theta[t.j as usize] + b + t.lr
    }

    /// `ℓ̃(θ; x) = Σ_m ln P_θ(X_m = x_m | x_{-m})`.
    pub fn loglik(&self, theta: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let z = self.logit(t, theta);
                if t.x {
                    -softplus(-z)
                } else {
                    -softplus(z)
                }
            })
            .sum()
    }

    pub fn grad(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for t in &self.terms {
            let r = f64::from(u8::from(t.x)) - logistic(self.logit(t, theta));
            g[t.i as usize] += r;
            g[t.j as usize] += r;
            if self.dim > self.n {
                g[self.n] += r * t.db;
            }
        }
        g
    }

    /// `∇²ℓ̃ = -Σ_m p_m (1 - p_m) δ_m δ_mᵀ`.
    pub fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let p = self.dim;
        let n = self.n;
        let mut h = DMatrix::zeros(p, p);
        for t in &self.terms {
            let q = logistic(self.logit(t, theta));
            let v = q * (1.0 - q);
            let (i, j) = (t.i as usize, t.j as usize);
            h[(i, i)] -= v;
            h[(j, j)] -= v;
            h[(i, j)] -= v;
            h[(j, i)] -= v;
            if p > n {
                let vb = v * t.db;
                h[(i, n)] -= vb;
                h[(j, n)] -= vb;
                h[(n, n)] -= vb * t.db;
            }
        }
        if p > n {
            for i in 0..n {
                h[(n, i)] = h[(i, n)];
            }
        }
        h
    }
}

pub fn pseudo_loglik(theta: &Theta, g: &Graph, model: &ModelSpec) -> f64 {
    PseudoData::new(g, model).loglik(&theta.to_vec())
}

pub fn pseudo_grad(theta: &Theta, g: &Graph, model: &ModelSpec) -> Vec<f64> {
    PseudoData::new(g, model).grad(&theta.to_vec())
}

pub fn pseudo_hessian(theta: &Theta, g: &Graph, model: &ModelSpec) -> DMatrix<f64> {
    PseudoData::new(g, model).hessian(&theta.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
    Diverged,
    DegenerateData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub objective: f64,
    pub grad_inf_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    #[serde(serialize_with = "serialize_theta")]
    pub theta_hat: Theta,
    pub grad_inf_norm: f64,
    pub gamma: f64,
    pub in_theta_tilde_set: bool,
    pub iterations: usize,
    pub status: FitStatus,
    pub trace: Vec<TraceEntry>,
}

fn serialize_theta<S: serde::Serializer>(t: &Theta, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&t.to_vec(), s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    /// Degree parameters from a beta-model fit, brokerage 0.
    BetaWarm,
    Given(Theta),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub init: Init,
    pub divergence_guard: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            init: Init::Zero,
            divergence_guard: 50.0,
            max_halvings: 60,
        }
    }
}

pub const DEFAULT_GAMMA: f64 = 1e-6;

fn check_beta_degrees(g: &Graph) -> Result<()> {
    let n = g.n_nodes();
    if n < 2 {
        return Err(Error::DegenerateData("fewer than two nodes".into()));
    }
    if let Some((i, d)) = g
        .degrees()
        .into_iter()
        .enumerate()
        .find(|&(_, d)| d == 0 || d == n - 1)
    {
        return Err(Error::DegenerateData(format!(
            "node {} has boundary degree {d}",
            i + 1
        )));
    }
    Ok(())
}

/// Solves `A s = b` for symmetric positive semidefinite `A`, adding a growing ridge when
/// the Cholesky factorization fails.
fn ridge_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(c) = a.clone().cholesky() {
        return Some(c.solve(b));
    }
    let p = a.nrows();
    let mut lambda = 1e-8 * (a.trace() / p as f64).abs().max(f64::MIN_POSITIVE);
    for _ in 0..20 {
        let mut r = a.clone();
        for k in 0..p {
            r[(k, k)] += lambda;
        }
        if let Some(c) = r.cholesky() {
            return Some(c.solve(b));
        }
        lambda *= 10.0;
    }
    None
}

/// Damped Newton ascent on `ℓ̃` until `‖g‖∞ <= γ`.
pub fn fit_mple(g: &Graph, model: &ModelSpec, gamma: f64, opts: &FitOptions) -> Result<FitResult> {
    if !(gamma >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "gamma = {gamma} must be nonnegative"
        )));
    }
    if g.n_nodes() != model.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_nodes(),
            got: g.n_nodes(),
        });
    }
    if model.variant() == Variant::Beta {
        check_beta_degrees(g)?;
    }
    let theta0 = match &opts.init {
        Init::Zero => Theta::zeros(model),
        Init::Given(t) => {
            t.check_dim(model)?;
            t.clone()
        }
        Init::BetaWarm => {
            let beta = ModelSpec::beta(model.population().clone());
            let mut t = Theta::zeros(model);
            if let Ok(fit) = fit_mple(g, &beta, 1e-8, &FitOptions::default()) {
                if fit.status == FitStatus::Converged {
                    t.degree = fit.theta_hat.degree;
                }
            }
            t
        }
    };
    let data = PseudoData::new(g, model);
    let (theta, status, iterations, trace) = newton_ascent(&data, theta0.to_vec(), gamma, opts);
    let grad_inf_norm = sup_norm(&data.grad(&theta));
    Ok(FitResult {
        theta_hat: Theta::from_flat(model, &theta)?,
        grad_inf_norm,
        gamma,
        in_theta_tilde_set: grad_inf_norm <= gamma,
        iterations,
        status,
        trace,
    })
}

fn newton_ascent(
    data: &PseudoData,
    mut theta: Vec<f64>,
    gamma: f64,
    opts: &FitOptions,
) -> (Vec<f64>, FitStatus, usize, Vec<TraceEntry>) {
    let mut trace = Vec::new();
    let mut f = data.loglik(&theta);
    let mut grad = data.grad(&theta);
    for iter in 0..=opts.max_iterations {
        let gn = sup_norm(&grad);
        trace.push(TraceEntry {
            objective: f,
            grad_inf_norm: gn,
        });
        if gn <= gamma {
            return (theta, FitStatus::Converged, iter, trace);
        }
        if sup_norm(&theta) > opts.divergence_guard || !f.is_finite() {
            return (theta, FitStatus::Diverged, iter, trace);
        }
        if iter == opts.max_iterations {
            break;
        }
        let neg_h = -data.hessian(&theta);
        let gv = DVector::from_vec(grad.clone());
        let newton = ridge_solve(&neg_h, &gv)
            .filter(|s| s.iter().all(|v| v.is_finite()) && s.dot(&gv) > 0.0);
        let mut accepted = None;
        let directions: Vec<DVector<f64>> = match newton {
            Some(s) => vec![s, gv.clone()],
            None => vec![gv.clone()],
        };
        'dirs: for dir in directions {
            let mut t = 1.0;
            for _ in 0..opts.max_halvings {
                let cand: Vec<f64> = theta
                    .iter()
                    .zip(dir.iter())
                    .map(|(a, d)| a + t * d)
                    .collect();
                let fc = data.loglik(&cand);
                if fc.is_finite() {
                    let gc = data.grad(&cand);
                    // Near the optimum ℓ̃ stops resolving improvements, so a step that
                    // ties within rounding but shrinks the gradient is also taken.
                    let tie = fc >= f - 1e-13 * (1.0 + f.abs()) && sup_norm(&gc) < gn;
                    if fc > f || tie {
                        accepted = Some((cand, fc, gc));
                        break 'dirs;
                    }
                }
                t *= 0.5;
            }
        }
        match accepted {
            Some((cand, fc, gc)) => {
                theta = cand;
                f = fc;
                grad = gc;
            }
            None => return (theta, FitStatus::MaxIterations, iter, trace),
        }
    }
    (theta, FitStatus::MaxIterations, opts.max_iterations, trace)
}

/// `Σ_{j≠i} logistic(θ_i + θ_j)` for each node.
pub fn beta_expected_degrees(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let mut e = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = logistic(theta[i] + theta[j]);
            e[i] += p;
            e[j] += p;
        }
    }
    e
}

fn beta_loglik(theta: &[f64], degrees: &[usize]) -> f64 {
    let n = theta.len();
    let mut v: f64 = theta.iter().zip(degrees).map(|(t, &d)| t * d as f64).sum();
    for i in 0..n {
        for j in i + 1..n {
            v -= softplus(theta[i] + theta[j]);
        }
    }
    v
}

/// Beta-model MLE: solves `d_i = Σ_{j≠i} logistic(θ_i + θ_j)` by the fixed-point map
/// `θ_i ← ln d_i − ln Σ_{j≠i} 1/(e^{−θ_j} + e^{θ_i})`, then polishes with Newton steps
/// on the moment equations.
pub fn mle_beta(g: &Graph, gamma: f64) -> Result<FitResult> {
    check_beta_degrees(g)?;
    let n = g.n_nodes();
    let degrees = g.degrees();
    let d: Vec<f64> = degrees.iter().map(|&v| v as f64).collect();
    let mut theta: Vec<f64> = d
        .iter()
        .map(|&di| (di / (n as f64 - 1.0 - di)).ln() / 2.0)
        .collect();
    let mut trace = Vec::new();
    let residual = |t: &[f64]| -> Vec<f64> {
        d.iter()
            .zip(beta_expected_degrees(t))
            .map(|(di, e)| di - e)
            .collect()
    };
    let mut iterations = 0;
    for _ in 0..5000 {
        iterations += 1;
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let s: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| 1.0 / ((-theta[j]).exp() + theta[i].exp()))
                    .sum();
                d[i].ln() - s.ln()
            })
            .collect();
        let change = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = next;
        if !theta.iter().all(|v| v.is_finite()) || sup_norm(&theta) > 50.0 {
            return Ok(beta_result(
                theta,
                &degrees,
                gamma,
                iterations,
                FitStatus::Diverged,
                trace,
            ));
        }
        if change < 1e-6 {
            break;
        }
    }
    let mut status = FitStatus::MaxIterations;
    for _ in 0..100 {
        let r = residual(&theta);
        let rn = sup_norm(&r);
        trace.push(TraceEntry {
            objective: beta_loglik(&theta, &degrees),
            grad_inf_norm: rn,
        });
        if rn <= gamma {
            status = FitStatus::Converged;
            break;
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let p = logistic(theta[i] + theta[j]);
                let v = p * (1.0 - p);
                jac[(i, j)] = v;
                jac[(j, i)] = v;
                jac[(i, i)] += v;
                jac[(j, j)] += v;
            }
        }
        let Some(step) = ridge_solve(&jac, &DVector::from_vec(r)) else {
            break;
        };
        let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
        if sup_norm(&residual(&cand)) >= rn {
            break;
        }
        theta = cand;
    }
    Ok(beta_result(
        theta, &degrees, gamma, iterations, status, trace,
    ))
}

fn beta_result(
    theta: Vec<f64>,
    degrees: &[usize],
    gamma: f64,
    iterations: usize,
    status: FitStatus,
    trace: Vec<TraceEntry>,
) -> FitResult {
    let e = beta_expected_degrees(&theta);
    let grad_inf_norm = degrees
        .iter()
        .zip(&e)
        .map(|(&d, e)| (d as f64 - e).abs())
        .fold(0.0, f64::max);
    FitResult {
        theta_hat: Theta {
            degree: theta,
            brokerage: None,
        },
        grad_inf_norm,
        gamma,
        in_theta_tilde_set: grad_inf_norm <= gamma,
        iterations,
        status,
        trace,
    }
}
