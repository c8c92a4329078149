//! Simulate a graph, then compute the maximum pseudo-likelihood estimate and compare
//! with the data-generating parameter.

use gbeta::estimator::{pseudo_hessian, Init};
use gbeta::experiment::{draw_theta_star, generate_population_paper, ThetaStarSpec};
use gbeta::{
    fit_mple, gibbs_sample, mle_beta, FitOptions, GibbsConfig, Graph, ModelSpec, Population,
};

fn main() -> gbeta::Result<()> {
    let pop = generate_population_paper(100, 11)?;
    let model = ModelSpec::brokerage(pop);
    let theta_star = draw_theta_star(&model, &ThetaStarSpec::default(), 11)?;
    let g = gibbs_sample(&theta_star, &model, &GibbsConfig::with_seed(11), 1)?.remove(0);
    println!("N = {}, {} edges", g.n_nodes(), g.edge_count());

    let fit = fit_mple(&g, &model, 1e-8, &FitOptions::default())?;
    println!(
        "{:?} after {} iterations, ‖∇‖∞ = {:.2e}",
        fit.status, fit.iterations, fit.grad_inf_norm
    );
    for (k, t) in fit.trace.iter().enumerate().take(8) {
        println!(
            "  iter {k}: objective {:.6}, ‖∇‖∞ {:.3e}",
            t.objective, t.grad_inf_norm
        );
    }
    let err = fit
        .theta_hat
        .degree
        .iter()
        .zip(&theta_star.degree)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "max degree error {err:.4}, brokerage {:.4} (true {:.2})",
        fit.theta_hat.brokerage_or_zero(),
        theta_star.brokerage_or_zero()
    );
    let h = pseudo_hessian(&fit.theta_hat, &g, &model);
    let top = nalgebra::SymmetricEigen::new(h).eigenvalues.max();
    println!("largest Hessian eigenvalue at the estimate: {top:.3e}");

    // With independent edges the pseudo-likelihood is the likelihood.
    let cycle = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)])?;
    let beta = ModelSpec::beta(Population::single(4));
    let mple = fit_mple(
        &cycle,
        &beta,
        1e-12,
        &FitOptions {
            init: Init::Zero,
            ..FitOptions::default()
        },
    )?;
    let mle = mle_beta(&cycle, 1e-12)?;
    println!("four-cycle: MPLE {:.10?}", mple.theta_hat.degree);
    println!(
        "            MLE  {:.10?}  (ln 2 / 2 = {:.10})",
        mle.theta_hat.degree,
        std::f64::consts::LN_2 / 2.0
    );
    Ok(())
}
