mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{all_variants, overlap5, random_theta};
use gbeta::math::{logistic, median};
use gbeta::models::log_unnormalized_density;
use gbeta::sampler::{enumerate_exact_with, gibbs_run};
use gbeta::{
    enumerate_exact, gibbs_sample, sample_beta_exact, GibbsConfig, Graph, ModelSpec, Population,
    Theta,
};

#[test]
fn beta_exact_zero_theta_is_fair() {
    let model = ModelSpec::beta(Population::single(4));
    let theta = Theta::zeros(&model);
    let draws = 100_000usize;
    let mut ones = 0usize;
    for s in 0..draws as u64 {
        ones += sample_beta_exact(&theta, &model, s).unwrap().edge_count();
    }
    let trials = (draws * 6) as f64;
    let f = ones as f64 / trials;
    assert!((f - 0.5).abs() <= 3.0 * (0.25 / trials).sqrt(), "{f}");
}

#[test]
fn beta_exact_log3_pair() {
    let model = ModelSpec::beta(Population::single(3));
    let theta = Theta::new(vec![3f64.ln(), 0.0, -30.0], None).unwrap();
    let draws = 100_000usize;
    let mut hits = 0usize;
    let mut others = 0usize;
    for s in 0..draws as u64 {
        let g = sample_beta_exact(&theta, &model, s).unwrap();
        hits += usize::from(g.has_edge(0, 1));
        others += usize::from(g.has_edge(0, 2)) + usize::from(g.has_edge(1, 2));
    }
    let f = hits as f64 / draws as f64;
    assert!(
        (f - 0.75).abs() <= 3.0 * (0.75 * 0.25 / draws as f64).sqrt(),
        "{f}"
    );
    assert_eq!(others, 0);
}

#[test]
fn zero_brokerage_reduces_to_independent_edges() {
    let model = ModelSpec::brokerage(overlap5());
    let theta = Theta::new(vec![-0.8, 0.4, 0.0, -0.3, 0.6], Some(0.0)).unwrap();
    let n = 8000;
    let mut counts = vec![0usize; 10];
    gibbs_run(&theta, &model, &GibbsConfig::with_seed(5), n, |s| {
        for (m, c) in counts.iter_mut().enumerate() {
            *c += usize::from(s.graph().get_linear(m));
        }
    })
    .unwrap();
    let idx = gbeta::EdgeIndex::new(5);
    for (m, &c) in counts.iter().enumerate() {
        let (i, j) = idx.pair_unchecked(m);
        let p = logistic(theta.degree[i] + theta.degree[j]);
        let f = c as f64 / n as f64;
        // Spaced draws are close to independent here; 4 SE allows mild autocorrelation.
        assert!(
            (f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt(),
            "edge {m}: {f} vs {p}"
        );
    }
}

#[test]
fn gibbs_matches_enumeration_for_every_variant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for model in all_variants(&overlap5()) {
        let theta = random_theta(&model, 0.7, &mut rng);
        let exact = enumerate_exact(&theta, &model).unwrap();
        let n = 6000;
        let mut draws: Vec<Vec<f64>> = Vec::new();
        gibbs_run(&theta, &model, &GibbsConfig::with_seed(9), n, |s| {
            draws.push(s.suff_stats().to_vec())
        })
        .unwrap();
        for (c, &target) in exact.mean_suff_stats.iter().enumerate() {
            let batch_means: Vec<f64> = draws
                .chunks(n / 60)
                .map(|b| b.iter().map(|d| d[c]).sum::<f64>() / b.len() as f64)
                .collect();
            let mean = batch_means.iter().sum::<f64>() / 60.0;
            let var = batch_means.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / 59.0;
            let se = (var / 60.0).sqrt().max(1e-12);
            assert!(
                (mean - target).abs() <= 4.0 * se,
                "{} coord {c}: {mean} vs {target}",
                model.variant().name()
            );
        }
    }
}

#[test]
fn enumeration_is_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for model in all_variants(&overlap5()) {
        let theta = random_theta(&model, 1.5, &mut rng);
        let r = enumerate_exact_with(&theta, &model, false).unwrap();
        let total: f64 = (0u64..1024)
            .map(|c| {
                (log_unnormalized_density(&Graph::from_code(5, c), &theta, &model)
                    - r.log_normalizer)
                    .exp()
            })
            .sum();
        assert!((total - 1.0).abs() <= 1e-12, "{total}");
    }
}

#[test]
fn single_subpop_n3_expectations() {
    let pop = Population::single(3);
    let beta = ModelSpec::beta(pop.clone());
    let r = enumerate_exact(&Theta::zeros(&beta), &beta).unwrap();
    assert!((r.log_normalizer - 3.0 * 2f64.ln()).abs() < 1e-14);
    for v in &r.mean_suff_stats {
        assert!((v - 1.0).abs() < 1e-14);
    }
    let m2 = ModelSpec::brokerage(pop);
    let zero = enumerate_exact(&Theta::zeros(&m2), &m2).unwrap();
    assert!((zero.mean_brokerage - 3.0 / 8.0).abs() < 1e-14);
    let up = enumerate_exact(&Theta::new(vec![0.0; 3], Some(0.25)).unwrap(), &m2).unwrap();
    assert!(up.mean_brokerage > zero.mean_brokerage);
}

#[test]
fn ergodic_average_error_shrinks() {
    let model = ModelSpec::brokerage(overlap5());
    let theta = Theta::new(vec![-0.5, 0.1, -0.2, 0.3, -0.4], Some(0.3)).unwrap();
    let exact = enumerate_exact(&theta, &model).unwrap().mean_brokerage;
    let sizes = [128usize, 512, 2048, 8192];
    let mut errors = vec![Vec::new(); sizes.len()];
    for seed in 0..20 {
        let mut sum = 0.0;
        let mut k = 0;
        let cfg = GibbsConfig::with_seed(100 + seed);
        gibbs_run(&theta, &model, &cfg, *sizes.last().unwrap(), |s| {
            sum += s.brokered() as f64;
            k += 1;
            if let Some(pos) = sizes.iter().position(|&n| n == k) {
                errors[pos].push((sum / k as f64 - exact).abs());
            }
        })
        .unwrap();
    }
    let medians: Vec<f64> = errors.iter().map(|e| median(e).unwrap()).collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn gibbs_sample_is_reproducible() {
    let model = ModelSpec::brokerage(overlap5());
    let theta = Theta::new(vec![-0.5; 5], Some(0.25)).unwrap();
    let cfg = GibbsConfig::with_seed(77);
    let a = gibbs_sample(&theta, &model, &cfg, 20).unwrap();
    assert_eq!(a, gibbs_sample(&theta, &model, &cfg, 20).unwrap());
    let other = GibbsConfig { chain: 1, ..cfg };
    assert_ne!(a, gibbs_sample(&theta, &model, &other, 20).unwrap());
}
