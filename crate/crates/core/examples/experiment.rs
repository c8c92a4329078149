//! A small replicated simulation: generate, sample, fit, summarise.

use gbeta::experiment::{run_experiment, summarize_rate, ExperimentConfig};

fn main() -> gbeta::Result<()> {
    let out_dir = std::env::temp_dir().join("gbeta-example-experiment");
    let cfg = ExperimentConfig {
        n_values: vec![50, 100],
        replications: 10,
        seed: 2024,
        out_dir: Some(out_dir.clone()),
        ..ExperimentConfig::default()
    };
    let result = run_experiment(&cfg)?;
    for s in &result.summary.per_n {
        println!(
            "N = {:>3}: {}/{} converged, median ‖θ̃ − θ*‖∞ = {:.4} (degrees {:.4}, brokerage {:.4})",
            s.n,
            s.converged,
            s.trials,
            s.median_error_sup,
            s.median_error_degrees,
            s.median_error_brokerage
        );
    }
    let rate = summarize_rate(&result.records)?;
    for row in &rate.rows {
        println!("  r({}) = {:.3}", row.n, row.r);
    }
    println!("spread {:.3}; files in {}", rate.spread, out_dir.display());
    Ok(())
}
