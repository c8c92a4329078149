//! Gibbs sampling from the brokerage model and exact sampling from the beta model.

use gbeta::models::suff_stats;
use gbeta::sampler::gibbs_run;
use gbeta::{
    gibbs_sample, sample_beta_exact, GibbsConfig, ModelSpec, Population, ScanOrder, Theta,
};

fn main() -> gbeta::Result<()> {
    let pop = Population::new(
        &[(0..8).collect(), (6..14).collect(), (12..20).collect()],
        20,
    )?;
    let model = ModelSpec::brokerage(pop.clone());
    let theta = Theta::new(vec![-1.0; 20], Some(0.25))?;

    let cfg = GibbsConfig {
        burn_in_sweeps: 100,
        sweeps_between_samples: 10,
        scan_order: ScanOrder::RandomPermutationPerSweep,
        ..GibbsConfig::with_seed(7)
    };
    let graphs = gibbs_sample(&theta, &model, &cfg, 5)?;
    for (k, g) in graphs.iter().enumerate() {
        let s = suff_stats(g, &model);
        println!(
            "draw {k}: {} edges, {} brokered",
            g.edge_count(),
            s.brokered
        );
    }

    let mut edges = 0.0;
    let mut brokered = 0.0;
    let n = 2000;
    gibbs_run(&theta, &model, &GibbsConfig::with_seed(8), n, |state| {
        edges += state.graph().edge_count() as f64;
        brokered += state.brokered() as f64;
    })?;
    println!(
        "ergodic means over {n} draws: edges {:.2}, brokered {:.2}",
        edges / n as f64,
        brokered / n as f64
    );

    let beta = ModelSpec::beta(pop);
    let g = sample_beta_exact(&Theta::new(vec![-1.0; 20], None)?, &beta, 3)?;
    println!(
        "exact beta draw: {} edges, degrees {:?}",
        g.edge_count(),
        g.degrees()
    );
    Ok(())
}
