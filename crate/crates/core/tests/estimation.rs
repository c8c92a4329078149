mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_variants, overlap5, random_graph, random_theta};
use gbeta::estimator::{pseudo_grad, pseudo_loglik, Init};
use gbeta::math::sup_norm;
use gbeta::sampler::enumerate_exact_with;
use gbeta::{
    fit_mple, gibbs_sample, mle_beta, Error, FitOptions, FitStatus, GibbsConfig, Graph, ModelSpec,
    Population, Theta,
};

#[test]
fn true_parameter_zeroes_the_expected_pseudo_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for model in all_variants(&overlap5()) {
        let theta = random_theta(&model, 1.0, &mut rng);
        let dist = enumerate_exact_with(&theta, &model, true)
            .unwrap()
            .distribution
            .unwrap();
        let mut expected = vec![0.0; model.dim()];
        for (code, p) in dist.iter().enumerate() {
            let g = Graph::from_code(5, code as u64);
            for (e, v) in expected.iter_mut().zip(pseudo_grad(&theta, &g, &model)) {
                *e += p * v;
            }
        }
        assert!(
            sup_norm(&expected) <= 1e-8,
            "{}: {expected:?}",
            model.variant().name()
        );
    }
}

#[test]
fn fitted_point_is_a_local_maximum() {
    let model = ModelSpec::brokerage(Population::single(5));
    let theta_star = Theta::new(vec![-0.2, 0.1, 0.3, -0.1, 0.0], Some(0.25)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut fitted = 0;
    for seed in 0..200 {
        let g = gibbs_sample(&theta_star, &model, &GibbsConfig::with_seed(seed), 1)
            .unwrap()
            .remove(0);
        let fit = match fit_mple(&g, &model, 1e-6, &FitOptions::default()) {
            Ok(f) if f.status == FitStatus::Converged => f,
            _ => continue,
        };
        // Near-separable samples have no finite maximizer; the fit then stops far out on
        // a ray where the gradient has dropped below gamma.
        if fit.theta_hat.sup_norm() > 6.0 {
            continue;
        }
        assert!(fit.in_theta_tilde_set);
        let best = pseudo_loglik(&fit.theta_hat, &g, &model);
        let base = fit.theta_hat.to_vec();
        for _ in 0..100 {
            let v: Vec<f64> = base
                .iter()
                .map(|t| t + 0.1 * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            let other = Theta::from_flat(&model, &v).unwrap();
            assert!(
                pseudo_loglik(&other, &g, &model) <= best + 1e-12,
                "seed {seed}"
            );
        }
        fitted += 1;
    }
    assert!(fitted >= 10, "only {fitted} samples gave a converged fit");
}

#[test]
fn tight_gamma_gives_tiny_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pop = Population::new(&[vec![0, 1, 2, 3, 4, 5], vec![4, 5, 6, 7, 8, 9]], 10).unwrap();
    for model in all_variants(&pop) {
        let g = random_graph(10, 0.5, &mut rng);
        let fit = fit_mple(&g, &model, 1e-8, &FitOptions::default()).unwrap();
        assert_eq!(fit.status, FitStatus::Converged);
        assert!(fit.grad_inf_norm <= 1e-8);
        assert!(sup_norm(&pseudo_grad(&fit.theta_hat, &g, &model)) <= 1e-8);
    }
}

fn permuted_population(pop: &Population, perm: &[usize]) -> Population {
    let subpops: Vec<Vec<usize>> = pop
        .subpops()
        .iter()
        .map(|s| s.iter().map(|&v| perm[v]).collect())
        .collect();
    Population::new(&subpops, pop.n_nodes()).unwrap()
}

#[test]
fn relabelling_nodes_permutes_the_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pop = Population::new(
        &[vec![0, 1, 2, 3, 4], vec![3, 4, 5, 6, 7], vec![6, 7, 8, 0]],
        9,
    )
    .unwrap();
    let perm = [4usize, 7, 0, 8, 2, 6, 1, 3, 5];
    for model in all_variants(&pop) {
        let g = loop {
            let g = random_graph(9, 0.5, &mut rng);
            if g.degrees().iter().all(|&d| d > 0 && d < 8) {
                break g;
            }
        };
        let fit = fit_mple(&g, &model, 1e-10, &FitOptions::default()).unwrap();
        let pmodel = ModelSpec::new(model.variant(), permuted_population(&pop, &perm)).unwrap();
        let pfit = fit_mple(
            &g.permuted(&perm).unwrap(),
            &pmodel,
            1e-10,
            &FitOptions::default(),
        )
        .unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert!((fit.theta_hat.degree[i] - pfit.theta_hat.degree[p]).abs() < 1e-8);
        }
        assert!(
            (fit.theta_hat.brokerage_or_zero() - pfit.theta_hat.brokerage_or_zero()).abs() < 1e-8
        );
    }
}

#[test]
fn beta_mle_and_mple_coincide_with_any_start() {
    let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    let model = ModelSpec::beta(Population::single(4));
    let mle = mle_beta(&g, 1e-12).unwrap();
    for init in [Init::Zero, Init::BetaWarm] {
        let opts = FitOptions {
            init,
            ..FitOptions::default()
        };
        let mple = fit_mple(&g, &model, 1e-12, &opts).unwrap();
        for (a, b) in mle.theta_hat.degree.iter().zip(&mple.theta_hat.degree) {
            assert!((a - b).abs() <= 1e-10);
            assert!((a - std::f64::consts::LN_2 / 2.0).abs() <= 1e-8);
        }
    }
}

#[test]
fn degenerate_beta_inputs() {
    let model = ModelSpec::beta(Population::single(5));
    let isolated = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    assert!(matches!(
        fit_mple(&isolated, &model, 1e-6, &FitOptions::default()),
        Err(Error::DegenerateData(_))
    ));
    assert!(matches!(
        mle_beta(&isolated, 1e-6),
        Err(Error::DegenerateData(_))
    ));
    assert!(matches!(
        mle_beta(&Graph::complete(5), 1e-6),
        Err(Error::DegenerateData(_))
    ));
}

#[test]
fn wrong_dimension_start_is_rejected() {
    let model = ModelSpec::brokerage(Population::single(4));
    let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
    let bad = Theta::new(vec![0.0; 3], Some(0.0)).unwrap();
    let opts = FitOptions {
        init: Init::Given(bad),
        ..FitOptions::default()
    };
    assert!(matches!(
        fit_mple(&g, &model, 1e-6, &opts),
        Err(Error::DimensionMismatch { .. })
    ));
}
