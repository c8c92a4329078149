//! Dependence diagnostics.

pub mod bounds;
pub mod cond_ind;
pub mod coupling;
pub mod subpop;

use serde::Serialize;

use crate::error::Result;
use crate::models::{ModelSpec, Theta};

pub use bounds::{
    coupling_norm_bound, percolation_entry_bounds, pi_star_bound, psi_bound, psi_bound_value,
    Assumption, CouplingNormBound, PsiReport,
};
pub use cond_ind::{
    assumption_a_neighbors, build_cond_ind_graph, conditioning_set, dependence_set,
    mixed_difference_check, pair_class, verify_cond_ind_empirically, AssumptionAReport,
    CondIndGraph, CondIndMode, CondIndReport, PairClass,
};
pub use coupling::{coupling_matrix_mc, McCoupling, PrefixMode, COUPLING_CAP};
pub use subpop::{check_assumption_b, AssumptionBReport, B1Params, SubpopGraph};

#[derive(Debug, Clone)]
pub struct DiagnoseOptions {
    pub assumption: Assumption,
    /// Cap on `max_m |𝔑_m|` to report against.
    pub dependence_cap: Option<usize>,
    /// `None` skips the Monte-Carlo coupling matrix.
    pub mc_coupling: Option<PrefixMode>,
    pub n_mc: usize,
    pub seed: u64,
    /// Random graphs scanned for the empirical brokerage sensitivity.
    pub psi_graphs: usize,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            assumption: Assumption::B2,
            dependence_cap: None,
            mc_coupling: None,
            n_mc: 2000,
            seed: 0,
            psi_graphs: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DependenceReport {
    #[serde(rename = "D")]
    pub d: usize,
    pub n_nodes: usize,
    pub variant: &'static str,
    pub pi_star_bound: f64,
    pub psi_bound: f64,
    pub psi: PsiReport,
    pub assumption_a: AssumptionAReport,
    pub assumption_b: AssumptionBReport,
    /// `None` stands for `+∞`; see `coupling_norm_bound_error`.
    pub coupling_norm_bound: Option<f64>,
    pub coupling_norm_bound_detail: Option<CouplingNormBound>,
    pub coupling_norm_bound_error: Option<String>,
    /// `√(N / ln N)`.
    pub threshold: f64,
    pub mc_coupling_matrix: Option<McCoupling>,
    /// Largest slack `entry − (bound + 3 SE)` over the Monte-Carlo matrix; `<= 0` is coherent.
    pub mc_max_excess_over_entry_bound: Option<f64>,
}

pub fn diagnose(
    model: &ModelSpec,
    theta: &Theta,
    opts: &DiagnoseOptions,
) -> Result<DependenceReport> {
    theta.check_dim(model)?;
    let pop = model.population();
    let d = pop.max_neighborhood();
    let n = model.n_nodes() as f64;
    let sg = SubpopGraph::new(pop);
    let b1 = match opts.assumption {
        Assumption::B1 { omega1, omega2 } => Some(B1Params { omega1, omega2 }),
        Assumption::B2 => None,
    };
    let pi_star = pi_star_bound(model, theta);
    let (norm, norm_detail, norm_err) = match coupling_norm_bound(model, theta, opts.assumption) {
        Ok(b) if b.value.is_finite() => (Some(b.value), Some(b), None),
        Ok(b) => (None, Some(b), Some("bound diverges".to_string())),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let (mc, excess) = match opts.mc_coupling {
        None => (None, None),
        Some(mode) => {
            let cig = build_cond_ind_graph(model);
            let mc =
                coupling::coupling_matrix_mc_with(model, theta, &cig, opts.n_mc, opts.seed, mode)?;
            let bounds = percolation_entry_bounds(&cig, pi_star);
            let mut excess = f64::NEG_INFINITY;
            for (i, row) in mc.entries.iter().enumerate() {
                for j in i + 1..row.len() {
                    excess = excess.max(row[j] - bounds[i][j] - 3.0 * mc.std_errors[i][j]);
                }
            }
            (Some(mc), excess.is_finite().then_some(excess))
        }
    };
    Ok(DependenceReport {
        d,
        n_nodes: model.n_nodes(),
        variant: model.variant().name(),
        pi_star_bound: pi_star,
        psi_bound: psi_bound_value(model),
        psi: psi_bound(model, opts.psi_graphs, 0.3, opts.seed),
        assumption_a: assumption_a_neighbors(model, opts.dependence_cap),
        assumption_b: check_assumption_b(&sg, d, b1),
        coupling_norm_bound: norm,
        coupling_norm_bound_detail: norm_detail,
        coupling_norm_bound_error: norm_err,
        threshold: if n > 1.0 {
            (n / n.ln()).sqrt()
        } else {
            f64::INFINITY
        },
        mc_coupling_matrix: mc,
        mc_max_excess_over_entry_bound: excess,
    })
}
