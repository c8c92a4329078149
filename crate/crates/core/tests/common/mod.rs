#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use gbeta::{Graph, ModelSpec, Population, Theta, Variant};

pub fn random_graph(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut g = Graph::empty(n);
    for m in 0..g.n_edge_vars() {
        g.set_linear(m, rng.random::<f64>() < density);
    }
    g
}

pub fn random_theta(model: &ModelSpec, scale: f64, rng: &mut ChaCha8Rng) -> Theta {
    let v: Vec<f64> = (0..model.dim())
        .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    Theta::from_flat(model, &v).unwrap()
}

pub fn variants() -> [Variant; 4] {
    [
        Variant::Beta,
        Variant::Brokerage,
        Variant::SparseBrokerage { alpha: 0.3 },
        Variant::SizeDependent,
    ]
}

pub fn all_variants(pop: &Population) -> Vec<ModelSpec> {
    variants()
        .into_iter()
        .map(|v| ModelSpec::new(v, pop.clone()).unwrap())
        .collect()
}

pub fn overlap5() -> Population {
    Population::new(&[vec![0, 1, 2], vec![2, 3, 4]], 5).unwrap()
}

/// 1-based in the figure: A1 = {1,2,3}, A2 = {3,4}, A3 = {4,5}, A4 = {5,6,7}.
pub fn fig_s1() -> Population {
    Population::new(&[vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![4, 5, 6]], 7).unwrap()
}
