//! Simulation harness: population generator, parameter draws, replication loop and
//! rate summaries.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fit_mple, FitOptions, FitStatus, DEFAULT_GAMMA};
use crate::math::{median, quantile};
use crate::models::{ModelSpec, Theta, Variant};
use crate::population::Population;
use crate::rng::{stream, trial_seed};
use crate::sampler::{gibbs_sample, GibbsConfig};

/// Nodes per subpopulation in the generator.
pub const NODES_PER_SUBPOP: usize = 25;

/// `K = N/25` subpopulations; node `i` joins `1 + Y_i` distinct ones, `Y_i ~ Bin(K−1, 1/K)`,
/// drawn one at a time without replacement from weights that favour the less crowded
/// subpopulations. When every remaining weight is zero the draw is uniform over the
/// remaining subpopulations.
pub fn generate_population_paper(n: usize, seed: u64) -> Result<Population> {
    Population::new(&draw_subpops(n, seed)?, n)
}

/// The member lists behind [`generate_population_paper`].
pub fn draw_subpops(n: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n % NODES_PER_SUBPOP != 0 {
        return Err(Error::BadN(n));
    }
    let k = n / NODES_PER_SUBPOP;
    let mut rng = stream(seed, 0, 0);
    let extra = Binomial::new((k - 1) as u64, 1.0 / k as f64).expect("valid binomial");
    let mut sizes = vec![0usize; k];
    let mut total = 0usize;
    let mut subpops = vec![Vec::new(); k];
    let mut weights = vec![0.0; k];
    for i in 0..n {
        for (w, &s) in weights.iter_mut().zip(&sizes) {
            *w = if i == 0 || k == 1 {
                1.0 / k as f64
            } else {
                (1.0 - s as f64 / total as f64) / (k - 1) as f64
            };
        }
        let draws = 1 + extra.sample(&mut rng) as usize;
        let mut taken = vec![false; k];
        for _ in 0..draws {
            let mass: f64 = (0..k).filter(|&c| !taken[c]).map(|c| weights[c]).sum();
            let pick = if mass > 0.0 {
                let mut u = rng.random::<f64>() * mass;
                let mut pick = None;
                for c in (0..k).filter(|&c| !taken[c]) {
                    pick = Some(c);
                    if u < weights[c] {
                        break;
                    }
                    u -= weights[c];
                }
                pick.expect("at least one subpopulation remains")
            } else {
                let free: Vec<usize> = (0..k).filter(|&c| !taken[c]).collect();
                free[rng.random_range(0..free.len())]
            };
            taken[pick] = true;
            subpops[pick].push(i);
        }
        for c in (0..k).filter(|&c| taken[c]) {
            sizes[c] += 1;
            total += 1;
        }
    }
    Ok(subpops)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaStarSpec {
    pub degree_lo: f64,
    pub degree_hi: f64,
    pub brokerage: f64,
}

impl Default for ThetaStarSpec {
    fn default() -> Self {
        Self {
            degree_lo: -1.25,
            degree_hi: -0.75,
            brokerage: 0.25,
        }
    }
}

/// Iid `U(lo, hi)` degree parameters; the brokerage entry is fixed and dropped for beta.
pub fn draw_theta_star(model: &ModelSpec, spec: &ThetaStarSpec, seed: u64) -> Result<Theta> {
    if !(spec.degree_lo <= spec.degree_hi) {
        return Err(Error::InvalidInput(format!(
            "degree range [{}, {}] is empty",
            spec.degree_lo, spec.degree_hi
        )));
    }
    let mut rng = stream(seed, 0, 1);
    let degree = (0..model.n_nodes())
        .map(|_| spec.degree_lo + (spec.degree_hi - spec.degree_lo) * rng.random::<f64>())
        .collect();
    Theta::new(
        degree,
        model.variant().has_brokerage().then_some(spec.brokerage),
    )
}

fn default_n_values() -> Vec<usize> {
    vec![50, 100, 200]
}
fn default_replications() -> usize {
    100
}
fn default_variant() -> String {
    "brokerage".into()
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_max_iterations() -> usize {
    FitOptions::default().max_iterations
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub theta_star: ThetaStarSpec,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Its `seed`, `replication` and `chain` are replaced per trial.
    #[serde(default)]
    pub gibbs: GibbsConfig,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Wall-clock times make `trials.csv` run-dependent, so they are off by default.
    #[serde(default)]
    pub record_wall_ms: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_values: default_n_values(),
            replications: default_replications(),
            variant: default_variant(),
            alpha: None,
            theta_star: ThetaStarSpec::default(),
            gamma: default_gamma(),
            gibbs: GibbsConfig::default(),
            max_iterations: default_max_iterations(),
            seed: 0,
            out_dir: None,
            record_wall_ms: false,
        }
    }
}

impl ExperimentConfig {
    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn variant(&self) -> Result<Variant> {
        Variant::parse(&self.variant, self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidInput("n_values is empty".into()));
        }
        if let Some(&n) = self
            .n_values
            .iter()
            .find(|&&n| n == 0 || n % NODES_PER_SUBPOP != 0)
        {
            return Err(Error::BadN(n));
        }
        if self.replications == 0 {
            return Err(Error::InvalidInput(
                "replications must be at least 1".into(),
            ));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.theta_star.degree_lo <= self.theta_star.degree_hi) {
            return Err(Error::InvalidInput(
                "theta_star degree range is empty".into(),
            ));
        }
        if self.gibbs.sweeps_between_samples == 0 {
            return Err(Error::InvalidInput(
                "sweeps_between_samples must be at least 1".into(),
            ));
        }
        let variant = self.variant()?;
        ModelSpec::new(variant, Population::single(3))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub converged: bool,
    pub error_sup: f64,
    pub error_degrees: f64,
    pub error_brokerage: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

pub const TRIALS_HEADER: &str =
    "n,rep,seed,converged,error_sup,error_degrees,error_brokerage,iterations,wall_ms";

/// One replication: population, `θ*`, one Gibbs draw, MPLE fit. Failures become a
/// non-converged record with NaN errors.
pub fn run_trial(cfg: &ExperimentConfig, variant: Variant, n: usize, rep: usize) -> TrialRecord {
    let seed = trial_seed(cfg.seed, n, rep);
    let start = Instant::now();
    let outcome = (|| -> Result<(bool, f64, f64, usize)> {
        let pop = generate_population_paper(n, seed)?;
        let model = ModelSpec::new(variant, pop)?;
        let theta_star = draw_theta_star(&model, &cfg.theta_star, seed)?;
        let gibbs = GibbsConfig {
            seed,
            replication: 0,
            chain: 2,
            ..cfg.gibbs.clone()
        };
        let g = gibbs_sample(&theta_star, &model, &gibbs, 1)?
            .pop()
            .expect("one sample");
        let opts = FitOptions {
            max_iterations: cfg.max_iterations,
            ..FitOptions::default()
        };
        let fit = fit_mple(&g, &model, cfg.gamma, &opts)?;
        let err_deg = fit
            .theta_hat
            .degree
            .iter()
            .zip(&theta_star.degree)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let err_b = (fit.theta_hat.brokerage_or_zero() - theta_star.brokerage_or_zero()).abs();
        Ok((
            fit.status == FitStatus::Converged,
            err_deg,
            err_b,
            fit.iterations,
        ))
    })();
    let wall_ms = if cfg.record_wall_ms {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    let (converged, error_degrees, error_brokerage, iterations) =
        outcome.unwrap_or((false, f64::NAN, f64::NAN, 0));
    TrialRecord {
        n,
        rep,
        seed,
        converged,
        error_sup: error_degrees.max(error_brokerage),
        error_degrees,
        error_brokerage,
        iterations,
        wall_ms,
    }
}

/// All trials, in `(N, rep)` order regardless of scheduling.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let variant = cfg.variant()?;
    let jobs: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(n, r)| run_trial(cfg, variant, n, r))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub trials: usize,
    pub converged: usize,
    pub convergence_rate: f64,
    pub median_error_sup: f64,
    pub q1_error_sup: f64,
    pub q3_error_sup: f64,
    pub median_error_degrees: f64,
    pub median_error_brokerage: f64,
    /// `median_error_sup / √(ln N / N)`.
    pub rate_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub median_error: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub rows: Vec<RateRow>,
    /// `max r / min r`.
    pub spread: f64,
    /// `spread <= 2`.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_n: Vec<NSummary>,
    pub rate: Option<RateSummary>,
    pub median_error_strictly_decreasing: bool,
    pub brokerage_more_accurate_everywhere: bool,
}

fn rate_scale(n: usize) -> f64 {
    let nf = n as f64;
    (nf.ln() / nf).sqrt()
}

fn distinct_ns(records: &[TrialRecord]) -> Vec<usize> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

/// Median error of converged trials per `N` against the `√(ln N / N)` law.
pub fn summarize_rate(records: &[TrialRecord]) -> Result<RateSummary> {
    let mut rows = Vec::new();
    for n in distinct_ns(records) {
        let errs: Vec<f64> = records
            .iter()
            .filter(|r| r.n == n && r.converged && r.error_sup.is_finite())
            .map(|r| r.error_sup)
            .collect();
        let Some(m) = median(&errs) else {
            continue;
        };
        rows.push(RateRow {
            n,
            median_error: m,
            r: m / rate_scale(n),
        });
    }
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need converged trials at two or more distinct N, have {}",
            rows.len()
        )));
    }
    let max = rows.iter().map(|r| r.r).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.r).fold(f64::INFINITY, f64::min);
    let spread = max / min;
    Ok(RateSummary {
        rows,
        spread,
        consistent: spread <= 2.0,
    })
}

pub fn summarize(records: &[TrialRecord]) -> Summary {
    let mut per_n = Vec::new();
    for n in distinct_ns(records) {
        let all: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
        let ok: Vec<&TrialRecord> = all
            .iter()
            .copied()
            .filter(|r| r.converged && r.error_sup.is_finite())
            .collect();
        let col = |f: fn(&TrialRecord) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
        let sup = col(|r| r.error_sup);
        let nan = f64::NAN;
        let (med, q1, q3) = (
            median(&sup).unwrap_or(nan),
            quantile(&sup, 0.25).unwrap_or(nan),
            quantile(&sup, 0.75).unwrap_or(nan),
        );
        let med_or_nan = |v: Vec<f64>| median(&v).unwrap_or(nan);
        per_n.push(NSummary {
            n,
            trials: all.len(),
            converged: ok.len(),
            convergence_rate: ok.len() as f64 / all.len() as f64,
            median_error_sup: med,
            q1_error_sup: q1,
            q3_error_sup: q3,
            median_error_degrees: med_or_nan(col(|r| r.error_degrees)),
            median_error_brokerage: med_or_nan(col(|r| r.error_brokerage)),
            rate_ratio: med / rate_scale(n),
        });
    }
    Summary {
        median_error_strictly_decreasing: per_n
            .windows(2)
            .all(|w| w[1].median_error_sup < w[0].median_error_sup),
        brokerage_more_accurate_everywhere: per_n
            .iter()
            .all(|s| s.median_error_brokerage < s.median_error_degrees),
        rate: summarize_rate(records).ok(),
        per_n,
    }
}

pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != TRIALS_HEADER {
        return Err(Error::InvalidInput(format!(
            "unexpected trials header: {header}"
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// `git describe` of the source tree when available, else the crate version.
pub fn version_string() -> String {
    std::process::Command::new("git")
        .args(["describe", "--tags", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| format!("v{}-{}", env!("CARGO_PKG_VERSION"), s.trim()))
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub sampler: String,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Runs every trial and, when `out_dir` is set, writes `trials.csv`, `summary.json`
/// and `manifest.json` there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let records = run_trials(cfg)?;
    let summary = summarize(&records);
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        write_trials_csv(&dir.join("trials.csv"), &records)?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)?,
        )?;
        let manifest = Manifest {
            version: version_string(),
            config: cfg.clone(),
            sampler: format!(
                "single-site Gibbs from the empty graph, {:?} scan, {} burn-in sweeps, one draw per trial",
                cfg.gibbs.scan_order, cfg.gibbs.burn_in_sweeps
            ),
            trials: records.len(),
        };
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
    }
    Ok(ExperimentOutput { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(law: impl Fn(usize) -> f64) -> Vec<TrialRecord> {
        [50usize, 400, 3200, 25600]
            .iter()
            .flat_map(|&n| {
                let e = law(n);
                (0..3).map(move |rep| TrialRecord {
                    n,
                    rep,
                    seed: 0,
                    converged: true,
                    error_sup: e,
                    error_degrees: e,
                    error_brokerage: e / 2.0,
                    iterations: 1,
                    wall_ms: 0,
                })
            })
            .collect()
    }

    #[test]
    fn generator_k_and_coverage() {
        let pop = generate_population_paper(125, 7).unwrap();
        assert_eq!(pop.n_subpops(), 5);
        for i in 0..125 {
            assert!(!pop.memberships(i).is_empty());
        }
        assert!(matches!(
            generate_population_paper(60, 0),
            Err(Error::BadN(60))
        ));
        assert!(matches!(
            generate_population_paper(0, 0),
            Err(Error::BadN(0))
        ));
        assert_eq!(generate_population_paper(25, 1).unwrap().n_subpops(), 1);
    }

    #[test]
    fn generator_deterministic() {
        assert_eq!(
            generate_population_paper(100, 3).unwrap().subpops(),
            generate_population_paper(100, 3).unwrap().subpops()
        );
    }

    #[test]
    fn first_node_uniform() {
        let mut counts = [0usize; 4];
        let reps = 4000;
        for s in 0..reps {
            for (k, members) in draw_subpops(100, s).unwrap().iter().enumerate() {
                counts[k] += usize::from(members.first() == Some(&0));
            }
        }
        let total: usize = counts.iter().sum();
        for c in counts {
            let f = c as f64 / total as f64;
            assert!((f - 0.25).abs() < 0.03, "{counts:?}");
        }
    }

    #[test]
    fn theta_star_defaults() {
        let model = ModelSpec::brokerage(Population::single(40));
        let th = draw_theta_star(&model, &ThetaStarSpec::default(), 9).unwrap();
        assert!(th.degree.iter().all(|&t| (-1.25..=-0.75).contains(&t)));
        assert_eq!(th.brokerage, Some(0.25));
        assert_eq!(
            th,
            draw_theta_star(&model, &ThetaStarSpec::default(), 9).unwrap()
        );
        let beta = ModelSpec::beta(Population::single(4));
        assert_eq!(
            draw_theta_star(&beta, &ThetaStarSpec::default(), 9)
                .unwrap()
                .brokerage,
            None
        );
    }

    #[test]
    fn rate_constant_under_right_law() {
        let r = summarize_rate(&synthetic(|n| 0.7 * rate_scale(n))).unwrap();
        assert!(r.consistent);
        assert!((r.spread - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_flag_fails_under_wrong_law() {
        let r = summarize_rate(&synthetic(|n| 3.0 / (n as f64).ln())).unwrap();
        assert!(!r.consistent, "{r:?}");
    }

    #[test]
    fn rate_needs_two_ns() {
        let recs: Vec<TrialRecord> = synthetic(|_| 1.0)
            .into_iter()
            .filter(|r| r.n == 50)
            .collect();
        assert!(matches!(
            summarize_rate(&recs),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.n_values = vec![50, 70];
        assert!(matches!(cfg.validate(), Err(Error::BadN(70))));
        cfg = ExperimentConfig {
            replications: 0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        let parsed: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"bogus": 1}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn trial_record_identity() {
        let cfg = ExperimentConfig {
            n_values: vec![25],
            replications: 2,
            ..ExperimentConfig::default()
        };
        for r in run_trials(&cfg).unwrap() {
            assert_eq!(r.error_sup, r.error_degrees.max(r.error_brokerage));
            assert!(r.error_sup >= 0.0);
            assert_eq!(r.wall_ms, 0);
        }
    }
}
