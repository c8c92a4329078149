//! Exact expectations by enumerating every graph on a handful of nodes.

use gbeta::sampler::{
    enumerate_exact_with, stationary_distribution, systematic_scan_kernel, total_variation,
};
use gbeta::{enumerate_exact, ModelSpec, Population, Theta, Variant};

fn main() -> gbeta::Result<()> {
    let pop = Population::new(&[vec![0, 1, 2], vec![2, 3, 4]], 5)?;
    for variant in [
        Variant::Beta,
        Variant::Brokerage,
        Variant::SparseBrokerage { alpha: 0.3 },
        Variant::SizeDependent,
    ] {
        let model = ModelSpec::new(variant, pop.clone())?;
        let brokerage = variant.has_brokerage().then_some(0.25);
        let theta = Theta::new(vec![-1.0; 5], brokerage)?;
        let r = enumerate_exact(&theta, &model)?;
        println!(
            "{:<17} ψ = {:.6}  E s = {:.4?}  E b = {:.4}",
            variant.name(),
            r.log_normalizer,
            r.mean_suff_stats,
            r.mean_brokerage
        );
    }

    // More brokered edges once the brokerage parameter is switched on.
    let model = ModelSpec::brokerage(Population::single(5));
    for b in [0.0, 0.25, 0.5] {
        let r = enumerate_exact_with(&Theta::new(vec![-1.0; 5], Some(b))?, &model, false)?;
        println!("θ_b = {b}: E b(X) = {:.5}", r.mean_brokerage);
    }

    let theta = Theta::new(vec![-0.5, 0.2, 0.0, -0.8, 0.4], Some(0.3))?;
    let kernel = systematic_scan_kernel(&theta, &model)?;
    let pi = stationary_distribution(&kernel, 1e-15, 10_000);
    let exact = enumerate_exact(&theta, &model)?
        .distribution
        .expect("retained for M <= 16");
    println!(
        "TV(Gibbs stationary law, exact law) = {:.2e}",
        total_variation(&pi, &exact)
    );
    Ok(())
}
