use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gbeta::diagnostics::{diagnose, Assumption, DiagnoseOptions, PrefixMode};
use gbeta::estimator::{fit_mple, FitOptions, FitResult, Init, DEFAULT_GAMMA};
use gbeta::experiment::{
    generate_population_paper, read_trials_csv, run_experiment, summarize, version_string,
    ExperimentConfig,
};
use gbeta::sampler::{gibbs_run, GibbsConfig};
use gbeta::{Graph, ModelSpec, Population, Theta, Variant};

#[derive(Parser)]
#[command(
    name = "gbeta",
    version,
    about = "Generalized beta-models with dependent edges"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a population with K = N/25 overlapping subpopulations.
    GeneratePopulation {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write a model spec over the generated population.
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[arg(long, default_value = "brokerage")]
        variant: String,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Gibbs-sample graphs and write one edge list per sample.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        theta: PathBuf,
        #[arg(long, default_value_t = 1)]
        n_samples: usize,
        #[arg(long, default_value_t = 50)]
        burn_in: usize,
        #[arg(long, default_value_t = 5)]
        spacing: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum pseudo-likelihood fit of an observed graph.
    Fit {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, value_enum, default_value_t = InitArg::BetaWarm)]
        init: InitArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Structural and dependence diagnostics.
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        /// Replaces the population stored in the model spec.
        #[arg(long)]
        population: Option<PathBuf>,
        #[arg(long)]
        theta: PathBuf,
        #[arg(long, value_enum, default_value_t = AssumptionArg::B2)]
        assumption: AssumptionArg,
        #[arg(long)]
        omega1: Option<f64>,
        #[arg(long)]
        omega2: Option<f64>,
        #[arg(long, value_enum, default_value_t = McArg::Off)]
        mc_coupling: McArg,
        #[arg(long, default_value_t = 2000)]
        n_mc: usize,
        /// Prefixes per vertex in sampled mode.
        #[arg(long, default_value_t = 64)]
        n_prefixes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated simulate-and-fit runs over a grid of N.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated, e.g. 50,100,200.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-N summary and rate diagnostic of a trials.csv.
    Summarize {
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Zero,
    BetaWarm,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssumptionArg {
    B1,
    B2,
}

#[derive(Clone, Copy, ValueEnum)]
enum McArg {
    Off,
    Exhaustive,
    Sampled,
}

/// Exit 2 for bad input or configuration, 1 for failures while running.
enum Failure {
    Config(String),
    Run(String),
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn run<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Run(e.to_string())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(run)?;
    }
    fs::write(path, serde_json::to_string_pretty(value).map_err(run)?).map_err(run)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    #[serde(flatten)]
    fit: &'a FitResult,
    wall_ms: u128,
}

#[derive(Serialize)]
struct SampleManifest<'a> {
    version: String,
    model: &'a Path,
    theta: &'a Path,
    gibbs: &'a GibbsConfig,
    n_samples: usize,
    files: Vec<String>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("gbeta: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("gbeta: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::GeneratePopulation {
            n,
            seed,
            out,
            model_out,
            variant,
            alpha,
        } => {
            let variant = Variant::parse(&variant, alpha).map_err(config)?;
            let pop = generate_population_paper(n, seed).map_err(config)?;
            write_json(&out, &pop.to_json())?;
            println!(
                "N={} K={} D={} min3={}",
                pop.n_nodes(),
                pop.n_subpops(),
                pop.max_neighborhood(),
                pop.assumption_min3()
            );
            if let Some(path) = model_out {
                let model = ModelSpec::new(variant, pop).map_err(config)?;
                write_json(&path, &model.to_json())?;
            }
            Ok(())
        }
        Command::Sample {
            model,
            theta,
            n_samples,
            burn_in,
            spacing,
            seed,
            out,
        } => {
            let spec = ModelSpec::read_json(&model).map_err(config)?;
            let th = Theta::read_json(&theta, &spec).map_err(config)?;
            let cfg = GibbsConfig {
                burn_in_sweeps: burn_in,
                sweeps_between_samples: spacing,
                ..GibbsConfig::with_seed(seed)
            };
            fs::create_dir_all(&out).map_err(run)?;
            let mut files = Vec::with_capacity(n_samples);
            let mut failure = None;
            gibbs_run(&th, &spec, &cfg, n_samples, |state| {
                let name = format!("sample_{:04}.csv", files.len());
                if let Err(e) = state.graph().write_edge_list(&out.join(&name)) {
                    failure.get_or_insert(e);
                }
                files.push(name);
            })
            .map_err(config)?;
            if let Some(e) = failure {
                return Err(run(e));
            }
            let manifest = SampleManifest {
                version: version_string(),
                model: &model,
                theta: &theta,
                gibbs: &cfg,
                n_samples,
                files,
            };
            write_json(&out.join("manifest.json"), &manifest)
        }
        Command::Fit {
            graph,
            model,
            gamma,
            max_iter,
            init,
            out,
        } => {
            let spec = ModelSpec::read_json(&model).map_err(config)?;
            let g = Graph::read_edge_list(&graph).map_err(config)?;
            if g.n_nodes() != spec.n_nodes() {
                return Err(Failure::Config(format!(
                    "graph has {} nodes, model has {}",
                    g.n_nodes(),
                    spec.n_nodes()
                )));
            }
            let opts = FitOptions {
                max_iterations: max_iter,
                init: match init {
                    InitArg::Zero => Init::Zero,
                    InitArg::BetaWarm => Init::BetaWarm,
                },
                ..FitOptions::default()
            };
            let start = Instant::now();
            let fit = fit_mple(&g, &spec, gamma, &opts).map_err(run)?;
            let wall_ms = start.elapsed().as_millis();
            println!(
                "status={:?} iterations={} grad_inf_norm={:.3e}",
                fit.status, fit.iterations, fit.grad_inf_norm
            );
            write_json(&out, &FitOutput { fit: &fit, wall_ms })
        }
        Command::Diagnose {
            model,
            population,
            theta,
            assumption,
            omega1,
            omega2,
            mc_coupling,
            n_mc,
            n_prefixes,
            seed,
            out,
        } => {
            let mut spec = ModelSpec::read_json(&model).map_err(config)?;
            if let Some(p) = population {
                let pop = Population::read_json(&p).map_err(config)?;
                spec = ModelSpec::new(spec.variant(), pop).map_err(config)?;
            }
            let th = Theta::read_json(&theta, &spec).map_err(config)?;
            let assumption = match assumption {
                AssumptionArg::B2 => Assumption::B2,
                AssumptionArg::B1 => match (omega1, omega2) {
                    (Some(omega1), Some(omega2)) => Assumption::B1 { omega1, omega2 },
                    _ => {
                        return Err(Failure::Config(
                            "--assumption b1 needs --omega1 and --omega2".into(),
                        ))
                    }
                },
            };
            let opts = DiagnoseOptions {
                assumption,
                mc_coupling: match mc_coupling {
                    McArg::Off => None,
                    McArg::Exhaustive => Some(PrefixMode::Exhaustive),
                    McArg::Sampled => Some(PrefixMode::Sampled { n_prefixes }),
                },
                n_mc,
                seed,
                ..DiagnoseOptions::default()
            };
            let report = diagnose(&spec, &th, &opts).map_err(config)?;
            match report.coupling_norm_bound {
                Some(b) => println!(
                    "D={} pi*={:.4} coupling bound={b:.4e}",
                    report.d, report.pi_star_bound
                ),
                None => println!(
                    "D={} pi*={:.4} coupling bound=inf ({})",
                    report.d,
                    report.pi_star_bound,
                    report.coupling_norm_bound_error.as_deref().unwrap_or("")
                ),
            }
            write_json(&out, &report)
        }
        Command::Experiment {
            config: path,
            n_list,
            reps,
            variant,
            alpha,
            gamma,
            seed,
            out,
        } => {
            let mut cfg = match path {
                Some(p) => ExperimentConfig::read_json(&p).map_err(config)?,
                None => ExperimentConfig::default(),
            };
            if let Some(v) = n_list {
                cfg.n_values = v;
            }
            if let Some(v) = reps {
                cfg.replications = v;
            }
            if let Some(v) = variant {
                cfg.variant = v;
            }
            if alpha.is_some() {
                cfg.alpha = alpha;
            }
            if let Some(v) = gamma {
                cfg.gamma = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            if cfg.out_dir.is_none() {
                return Err(Failure::Config(
                    "an output directory is required (--out)".into(),
                ));
            }
            cfg.validate().map_err(config)?;
            let result = run_experiment(&cfg).map_err(run)?;
            print_summary(&result.summary);
            Ok(())
        }
        Command::Summarize { trials, out } => {
            let records = read_trials_csv(&trials).map_err(config)?;
            let summary = summarize(&records);
            print_summary(&summary);
            if let Some(path) = out {
                write_json(&path, &summary)?;
            }
            Ok(())
        }
    }
}

fn print_summary(s: &gbeta::experiment::Summary) {
    println!(
        "{:>6} {:>9} {:>12} {:>12} {:>12} {:>8}",
        "N", "conv", "med_sup", "med_deg", "med_brk", "r(N)"
    );
    for row in &s.per_n {
        println!(
            "{:>6} {:>9} {:>12.5} {:>12.5} {:>12.5} {:>8.4}",
            row.n,
            format!("{}/{}", row.converged, row.trials),
            row.median_error_sup,
            row.median_error_degrees,
            row.median_error_brokerage,
            row.rate_ratio
        );
    }
    if let Some(rate) = &s.rate {
        println!(
            "rate spread max/min = {:.3} (consistent: {})",
            rate.spread, rate.consistent
        );
    }
}
