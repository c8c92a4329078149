//! Monte-Carlo estimate of the coupling matrix on enumerable instances.
//!
//! For each vertex `i` and prefix `x_{1:i−1}`, two chains start from `X_i = 0` and
//! `X_i = 1` and extend one edge variable at a time, always choosing the smallest
//! unvisited vertex adjacent to a current disagreement (or else the smallest unvisited
//! vertex), and drawing both values from the monotone maximal coupling of their
//! prefix-conditioned laws.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Theta};
use crate::rng::stream;
use crate::sampler::enumerate_exact_with;

use super::cond_ind::{build_cond_ind_graph, CondIndGraph};

/// Largest number of edge variables accepted by [`coupling_matrix_mc`].
pub const COUPLING_CAP: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PrefixMode {
    /// Every prefix `x_{1:i−1} ∈ {0,1}^{i−1}`.
    Exhaustive,
    /// `n_prefixes` uniformly drawn prefixes per vertex; a lower-confidence estimate.
    Sampled { n_prefixes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalCheck {
    /// Pooled comparisons of `P(X_j = 1)` under each chain against the exact law.
    pub comparisons: usize,
    pub max_abs_z: f64,
    /// Comparisons with `|z| > 3`.
    pub beyond_three_se: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCoupling {
    pub mode: PrefixMode,
    pub n_mc: usize,
    /// Upper triangular with unit diagonal.
    pub entries: Vec<Vec<f64>>,
    /// Binomial standard error of each entry at its maximizing prefix.
    pub std_errors: Vec<Vec<f64>>,
    pub prefixes_examined: usize,
    pub marginal_check: MarginalCheck,
}

/// Probabilities of all partial assignments: digit `v` of a base-3 code is 0, 1, or
/// 2 for "unassigned".
struct MarginalTable {
    m: usize,
    pow3: Vec<usize>,
    table: Vec<f64>,
}

impl MarginalTable {
    fn new(distribution: &[f64], m: usize) -> Self {
        let pow3: Vec<usize> = (0..=m).map(|k| 3usize.pow(k as u32)).collect();
        let size = pow3[m];
        let mut table = vec![0.0; size];
        let mut digits = vec![0u8; m];
        for t in 0..size {
            if t > 0 {
                // Odometer increment of the base-3 digits.
                for d in digits.iter_mut() {
                    if *d == 2 {
                        *d = 0;
                    } else {
                        *d += 1;
                        break;
                    }
                }
            }
            table[t] = match digits.iter().position(|&d| d == 2) {
                None => {
                    distribution[digits
                        .iter()
                        .enumerate()
                        .fold(0usize, |c, (k, &d)| c | (usize::from(d) << k))]
                }
                // Both completions of digit s have smaller codes.
                Some(s) => table[t - 2 * pow3[s]] + table[t - pow3[s]],
            };
        }
        Self { m, pow3, table }
    }

    fn free_code(&self) -> usize {
        self.pow3[self.m] - 1
    }

    #[inline]
    fn assign(&self, code: usize, v: usize, value: bool) -> usize {
        code - (2 - usize::from(value)) * self.pow3[v]
    }

    /// `P(X_v = 1 | assigned digits of code)`; digit `v` must be unassigned.
    #[inline]
    fn cond1(&self, code: usize, v: usize) -> f64 {
        let p1 = self.table[code - self.pow3[v]];
        let p0 = self.table[code - 2 * self.pow3[v]];
        p1 / (p0 + p1)
    }
}

struct CellResult {
    disagree: Vec<u32>,
    ones_star: Vec<u32>,
    ones_dstar: Vec<u32>,
    exact_star: Vec<f64>,
    exact_dstar: Vec<f64>,
}

fn run_cell(
    table: &MarginalTable,
    adj_mask: &[u32],
    i: usize,
    prefix: u32,
    n_mc: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> CellResult {
    let m = table.m;
    let mut base = table.free_code();
    for v in 0..i {
        base = table.assign(base, v, (prefix >> v) & 1 == 1);
    }
    let start_star = table.assign(base, i, false);
    let start_dstar = table.assign(base, i, true);
    let all: u32 = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut res = CellResult {
        disagree: vec![0; m],
        ones_star: vec![0; m],
        ones_dstar: vec![0; m],
        exact_star: (0..m)
            .map(|j| {
                if j > i {
                    table.cond1(start_star, j)
                } else {
                    f64::NAN
                }
            })
            .collect(),
        exact_dstar: (0..m)
            .map(|j| {
                if j > i {
                    table.cond1(start_dstar, j)
                } else {
                    f64::NAN
                }
            })
            .collect(),
    };
    for _ in 0..n_mc {
        let (mut cs, mut cd) = (start_star, start_dstar);
        let mut visited: u32 = (1u32 << (i + 1)) - 1;
        let mut frontier = adj_mask[i];
        let mut xs: u32 = 0;
        let mut xd: u32 = 1 << i;
        while visited != all {
            let unvisited = all & !visited;
            let cand = unvisited & frontier;
            let v = if cand != 0 {
                cand.trailing_zeros()
            } else {
                unvisited.trailing_zeros()
            } as usize;
            let u: f64 = rng.random();
            let a = u < table.cond1(cs, v);
            let b = u < table.cond1(cd, v);
            cs = table.assign(cs, v, a);
            cd = table.assign(cd, v, b);
            xs |= u32::from(a) << v;
            xd |= u32::from(b) << v;
            if a != b {
                frontier |= adj_mask[v];
            }
            visited |= 1 << v;
        }
        let diff = xs ^ xd;
        for j in i + 1..m {
            res.disagree[j] += (diff >> j) & 1;
            res.ones_star[j] += (xs >> j) & 1;
            res.ones_dstar[j] += (xd >> j) & 1;
        }
    }
    res
}

/// Estimates `𝒟_{i,j}` as the largest disagreement frequency over prefixes.
pub fn coupling_matrix_mc(
    model: &ModelSpec,
    theta: &Theta,
    n_mc: usize,
    seed: u64,
    mode: PrefixMode,
) -> Result<McCoupling> {
    let cig = build_cond_ind_graph(model);
    coupling_matrix_mc_with(model, theta, &cig, n_mc, seed, mode)
}

pub fn coupling_matrix_mc_with(
    model: &ModelSpec,
    theta: &Theta,
    cig: &CondIndGraph,
    n_mc: usize,
    seed: u64,
    mode: PrefixMode,
) -> Result<McCoupling> {
    let m = cig.n_vertices();
    if m > COUPLING_CAP {
        return Err(Error::TooLarge {
            what: "edge variables for the coupling matrix",
            size: m,
            cap: COUPLING_CAP,
        });
    }
    if n_mc == 0 {
        return Err(Error::InvalidInput("n_mc must be positive".into()));
    }
    let dist = enumerate_exact_with(theta, model, true)?
        .distribution
        .expect("distribution retained");
    let table = MarginalTable::new(&dist, m);
    let adj_mask: Vec<u32> = (0..m)
        .map(|v| cig.neighbors(v).iter().fold(0u32, |acc, &w| acc | (1 << w)))
        .collect();

    let mut cells: Vec<(usize, u64, u32)> = Vec::new();
    for i in 0..m {
        match mode {
            PrefixMode::Exhaustive => {
                for p in 0..(1u32 << i) {
                    cells.push((i, u64::from(p), p));
                }
            }
            PrefixMode::Sampled { n_prefixes } => {
                let mut rng = stream(seed ^ 0x5EED_0F_F1C5, i as u64, 0);
                for k in 0..n_prefixes {
                    let p = if i == 0 {
                        0
                    } else {
                        rng.random::<u32>() & ((1u32 << i) - 1)
                    };
                    cells.push((i, k as u64, p));
                }
            }
        }
    }
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(i, k, prefix)| {
            let mut rng = stream(seed, i as u64, k);
            run_cell(&table, &adj_mask, i, prefix, n_mc, &mut rng)
        })
        .collect();

    let nf = n_mc as f64;
    let mut entries = vec![vec![0.0; m]; m];
    let mut std_errors = vec![vec![0.0; m]; m];
    let mut pooled = vec![vec![(0u64, 0.0f64, 0.0f64, 0u64, 0.0f64, 0.0f64, 0usize); m]; m];
    for (&(i, _, _), r) in cells.iter().zip(&results) {
        entries[i][i] = 1.0;
        for j in i + 1..m {
            let f = f64::from(r.disagree[j]) / nf;
            if f > entries[i][j] || (f == entries[i][j] && std_errors[i][j] == 0.0) {
                entries[i][j] = f;
                std_errors[i][j] = (f * (1.0 - f) / nf).sqrt();
            }
            let e = &mut pooled[i][j];
            e.0 += u64::from(r.ones_star[j]);
            e.1 += r.exact_star[j];
            e.2 += r.exact_star[j] * (1.0 - r.exact_star[j]);
            e.3 += u64::from(r.ones_dstar[j]);
            e.4 += r.exact_dstar[j];
            e.5 += r.exact_dstar[j] * (1.0 - r.exact_dstar[j]);
            e.6 += 1;
        }
    }
    let mut check = MarginalCheck {
        comparisons: 0,
        max_abs_z: 0.0,
        beyond_three_se: 0,
    };
    for row in pooled.iter().take(m) {
        for e in row.iter() {
            if e.6 == 0 {
                continue;
            }
            let cells_f = e.6 as f64;
            for (ones, sum_p, sum_var) in [(e.0, e.1, e.2), (e.3, e.4, e.5)] {
                let emp = ones as f64 / (cells_f * nf);
                let exact = sum_p / cells_f;
                let se = (sum_var / nf).sqrt() / cells_f;
                if se > 0.0 {
                    let z = ((emp - exact) / se).abs();
                    check.comparisons += 1;
                    check.max_abs_z = check.max_abs_z.max(z);
                    if z > 3.0 {
                        check.beyond_three_se += 1;
                    }
                }
            }
        }
    }
    Ok(McCoupling {
        mode,
        n_mc,
        entries,
        std_errors,
        prefixes_examined: cells.len(),
        marginal_check: check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Variant;
    use crate::population::Population;

    #[test]
    fn marginal_table_sums() {
        // Independent bits with P(bit k = 1) = q_k.
        let q = [0.2, 0.7, 0.5];
        let dist: Vec<f64> = (0..8)
            .map(|c: usize| {
                (0..3)
                    .map(|k| if (c >> k) & 1 == 1 { q[k] } else { 1.0 - q[k] })
                    .product()
            })
            .collect();
        let t = MarginalTable::new(&dist, 3);
        assert!((t.table[t.free_code()] - 1.0).abs() < 1e-15);
        for v in 0..3 {
            assert!((t.cond1(t.free_code(), v) - q[v]).abs() < 1e-15);
        }
        let c = t.assign(t.free_code(), 0, true);
        assert!((t.cond1(c, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_entries_vanish() {
        let m = ModelSpec::new(Variant::Beta, Population::single(4)).unwrap();
        let th = Theta::new(vec![0.3, -0.4, 0.1, 0.9], None).unwrap();
        let r = coupling_matrix_mc(&m, &th, 200, 3, PrefixMode::Exhaustive).unwrap();
        for i in 0..6 {
            assert_eq!(r.entries[i][i], 1.0);
            for j in i + 1..6 {
                assert_eq!(r.entries[i][j], 0.0);
            }
        }
    }

    #[test]
    fn cap() {
        let m = ModelSpec::brokerage(Population::single(7));
        assert!(matches!(
            coupling_matrix_mc(&m, &Theta::zeros(&m), 10, 1, PrefixMode::Exhaustive),
            Err(Error::TooLarge { .. })
        ));
    }
}
