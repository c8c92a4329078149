//! The four model variants: sufficient statistics, reference measure, unnormalized
//! log-density and full-conditional edge probabilities.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::math::logistic;
use crate::population::{Population, PopulationJson};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Beta,
    Brokerage,
    SparseBrokerage { alpha: f64 },
    SizeDependent,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Beta => "beta",
            Variant::Brokerage => "brokerage",
            Variant::SparseBrokerage { .. } => "sparse_brokerage",
            Variant::SizeDependent => "size_dependent",
        }
    }

    pub fn has_brokerage(&self) -> bool {
        !matches!(self, Variant::Beta)
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Variant::SparseBrokerage { alpha } => *alpha,
            _ => 0.0,
        }
    }

    /// Parses a variant name as used in JSON and on the command line.
    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        let v = match name {
            "beta" => Variant::Beta,
            "brokerage" => Variant::Brokerage,
            "sparse_brokerage" => Variant::SparseBrokerage {
                alpha: alpha
                    .ok_or_else(|| Error::InvalidInput("sparse_brokerage requires alpha".into()))?,
            },
            "size_dependent" => Variant::SizeDependent,
            other => return Err(Error::InvalidInput(format!("unknown variant `{other}`"))),
        };
        if alpha.is_some() && !matches!(v, Variant::SparseBrokerage { .. }) {
            return Err(Error::InvalidInput(format!(
                "alpha is only valid for sparse_brokerage, got {name}"
            )));
        }
        Ok(v)
    }
}

/// A model variant bound to a population.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    variant: Variant,
    population: Population,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpecJson {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub population: PopulationJson,
}

impl ModelSpec {
    pub fn new(variant: Variant, population: Population) -> Result<Self> {
        if let Variant::SparseBrokerage { alpha } = variant {
            if !(0.0..0.5).contains(&alpha) {
                return Err(Error::OutOfRange(format!(
                    "alpha = {alpha} outside [0, 1/2)"
                )));
            }
        }
        Ok(Self {
            variant,
            population,
        })
    }

    pub fn beta(population: Population) -> Self {
        Self::new(Variant::Beta, population).expect("beta is always valid")
    }

    pub fn brokerage(population: Population) -> Self {
        Self::new(Variant::Brokerage, population).expect("brokerage is always valid")
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn n_nodes(&self) -> usize {
        self.population.n_nodes()
    }

    /// Parameter dimension: `N` for the beta model, `N + 1` otherwise.
    pub fn dim(&self) -> usize {
        self.n_nodes() + usize::from(self.variant.has_brokerage())
    }

    /// Weight of a brokered pair whose neighborhood intersection has `size` members.
    #[inline]
    pub fn size_weight(&self, size: usize) -> f64 {
        match self.variant {
            Variant::Beta => 0.0,
            Variant::Brokerage | Variant::SparseBrokerage { .. } => {
                if size > 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Variant::SizeDependent => size_dependent_weight(size),
        }
    }

    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        self.size_weight(self.population.intersection_size(i, j))
    }

    /// `ln a` contribution of a present edge `{i, j}`.
    #[inline]
    pub fn edge_log_reference(&self, i: usize, j: usize) -> f64 {
        self.pair_log_reference(self.population.intersection_size(i, j))
    }

    #[inline]
    pub fn pair_log_reference(&self, intersection_size: usize) -> f64 {
        match self.variant {
            Variant::SparseBrokerage { alpha } if intersection_size == 0 => {
                -alpha * (self.n_nodes() as f64).ln()
            }
            _ => 0.0,
        }
    }

    pub fn to_json(&self) -> ModelSpecJson {
        ModelSpecJson {
            variant: self.variant.name().to_string(),
            alpha: match self.variant {
                Variant::SparseBrokerage { alpha } => Some(alpha),
                _ => None,
            },
            population: self.population.to_json(),
        }
    }

    pub fn from_json(json: &ModelSpecJson) -> Result<Self> {
        let variant = Variant::parse(&json.variant, json.alpha)?;
        Self::new(variant, Population::from_json(&json.population)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }
}

/// `ln(1 + ln s / s)` for `s >= 2`, and 0 otherwise.
pub fn size_dependent_weight(size: usize) -> f64 {
    if size <= 1 {
        0.0
    } else {
        let s = size as f64;
        (s.ln() / s).ln_1p()
    }
}

/// Parameter vector: one propensity per node plus an optional brokerage parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub degree: Vec<f64>,
    pub brokerage: Option<f64>,
}

impl Theta {
    pub fn new(degree: Vec<f64>, brokerage: Option<f64>) -> Result<Self> {
        let t = Self { degree, brokerage };
        if t.to_vec().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("theta entries must be finite".into()));
        }
        Ok(t)
    }

    pub fn zeros(model: &ModelSpec) -> Self {
        Self {
            degree: vec![0.0; model.n_nodes()],
            brokerage: model.variant().has_brokerage().then_some(0.0),
        }
    }

    /// Flat layout: degree parameters first, brokerage last.
    pub fn from_flat(model: &ModelSpec, values: &[f64]) -> Result<Self> {
        if values.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: values.len(),
            });
        }
        let n = model.n_nodes();
        Self::new(values[..n].to_vec(), values.get(n).copied())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.degree.clone();
        v.extend(self.brokerage);
        v
    }

    pub fn len(&self) -> usize {
        self.degree.len() + usize::from(self.brokerage.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn brokerage_or_zero(&self) -> f64 {
        self.brokerage.unwrap_or(0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        crate::math::sup_norm(&self.to_vec())
    }

    /// Checks `‖θ‖∞ <= U + (1 - ϑ)/8 · ln N`.
    pub fn norm_bound_ok(&self, u: f64, vartheta: f64, n_nodes: usize) -> Result<bool> {
        if u <= 0.0 || !(vartheta > 0.5 && vartheta <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "need U > 0 and vartheta in (1/2, 1], got U = {u}, vartheta = {vartheta}"
            )));
        }
        Ok(self.sup_norm() <= u + (1.0 - vartheta) / 8.0 * (n_nodes as f64).ln())
    }

    pub fn check_dim(&self, model: &ModelSpec) -> Result<()> {
        if self.degree.len() != model.n_nodes()
            || self.brokerage.is_some() != model.variant().has_brokerage()
        {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: self.len(),
            });
        }
        Ok(())
    }

    pub fn read_json(path: &Path, model: &ModelSpec) -> Result<Self> {
        let v: Vec<f64> = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_flat(model, &v)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_vec())?)?;
        Ok(())
    }
}

/// `s(x)`: degrees and, for dependent variants, the brokerage coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub degrees: Vec<usize>,
    /// Unweighted number of brokered edges.
    pub brokered: usize,
    /// The brokerage coordinate (weighted for the size-dependent variant); `None` for beta.
    pub brokerage: Option<f64>,
}

impl SuffStats {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.degrees.iter().map(|&d| d as f64).collect();
        v.extend(self.brokerage);
        v
    }
}

/// `b_{i,j}(x)`: 1 if the edge is present and has a shared partner inside `N_i ∩ N_j`.
pub fn brokerage_indicator(g: &Graph, i: usize, j: usize, pop: &Population) -> bool {
    g.has_edge(i, j)
        && pop
            .intersection(i, j)
            .iter()
            .any(|&h| g.has_edge(i, h) && g.has_edge(j, h))
}

pub fn suff_stats(g: &Graph, model: &ModelSpec) -> SuffStats {
    let degrees = g.degrees();
    if !model.variant().has_brokerage() {
        return SuffStats {
            degrees,
            brokered: 0,
            brokerage: None,
        };
    }
    let pop = model.population();
    let mut brokered = 0;
    let mut weighted = 0.0;
    for (&(i, j), members) in pop.intersections() {
        if brokerage_indicator(g, i, j, pop) {
            brokered += 1;
            weighted += model.size_weight(members.len());
        }
    }
    SuffStats {
        degrees,
        brokered,
        brokerage: Some(weighted),
    }
}

/// `ln a(x)`: nonzero only for the sparse variant.
pub fn log_reference(g: &Graph, model: &ModelSpec) -> f64 {
    match model.variant() {
        Variant::SparseBrokerage { alpha } if alpha != 0.0 => {
            let pop = model.population();
            let cross = g
                .edges()
                .filter(|&(i, j)| pop.intersection_size(i, j) == 0)
                .count();
            -alpha * (model.n_nodes() as f64).ln() * cross as f64
        }
        _ => 0.0,
    }
}

/// `⟨θ, s(x)⟩ + ln a(x)`.
pub fn log_unnormalized_density(g: &Graph, theta: &Theta, model: &ModelSpec) -> f64 {
    let s = suff_stats(g, model);
    let mut v: f64 = s
        .degrees
        .iter()
        .zip(&theta.degree)
        .map(|(&d, t)| d as f64 * t)
        .sum();
    if let Some(b) = s.brokerage {
        v += theta.brokerage_or_zero() * b;
    }
    v + log_reference(g, model)
}

/// Change in the statistics when `x_{i,j}` goes from 0 to 1, other edges held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdgeDelta {
    /// Change in the unweighted brokered-edge count.
    pub brokered: u32,
    /// Change in the brokerage coordinate of `s`.
    pub brokerage: f64,
    /// Change in `ln a`.
    pub log_reference: f64,
}

impl EdgeDelta {
    /// `Δ` such that `P(X_{i,j} = 1 | rest) = logistic(Δ)`.
    #[inline]
    pub fn logit(&self, theta: &Theta, i: usize, j: usize) -> f64 {
        theta.degree[i]
            + theta.degree[j]
            + theta.brokerage_or_zero() * self.brokerage
            + self.log_reference
    }
}

fn indicator_with(
    g: &Graph,
    pop: &Population,
    a: usize,
    b: usize,
    fixed: (usize, usize),
    value: bool,
) -> bool {
    let x = |u: usize, v: usize| {
        if (u == fixed.0 && v == fixed.1) || (u == fixed.1 && v == fixed.0) {
            value
        } else {
            g.has_edge(u, v)
        }
    };
    x(a, b) && pop.intersection(a, b).iter().any(|&h| x(a, h) && x(b, h))
}

/// Statistic change of toggling `x_{i,j}` on, evaluated by rescanning only the pairs
/// whose indicator reads `x_{i,j}`.
pub fn edge_delta(g: &Graph, i: usize, j: usize, model: &ModelSpec) -> EdgeDelta {
    let pop = model.population();
    let mut d = EdgeDelta {
        log_reference: model.edge_log_reference(i, j),
        ..EdgeDelta::default()
    };
    if !model.variant().has_brokerage() {
        return d;
    }
    let mut add = |a: usize, b: usize| {
        let on = indicator_with(g, pop, a, b, (i, j), true);
        let off = indicator_with(g, pop, a, b, (i, j), false);
        if on != off {
            // Toggling an edge on can only create shared partners.
            debug_assert!(on && !off);
            d.brokered += 1;
            d.brokerage += model.pair_weight(a, b);
        }
    };
    add(i, j);
    if pop.are_neighbors(i, j) {
        for &c in pop.neighborhood(j) {
            if c != i {
                add(i, c);
            }
        }
        for &c in pop.neighborhood(i) {
            if c != j {
                add(j, c);
            }
        }
    }
    d
}

/// `P(X_{i,j} = 1 | x_{-{i,j}})`.
pub fn conditional_edge_prob(
    g: &Graph,
    i: usize,
    j: usize,
    theta: &Theta,
    model: &ModelSpec,
) -> f64 {
    logistic(edge_delta(g, i, j, model).logit(theta, i, j))
}

/// Bounds `L_k <= P(X = k | rest) <= U_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub l0: f64,
    pub u0: f64,
    pub l1: f64,
    pub u1: f64,
}

impl Envelope {
    fn with_exponent(e: f64, n_alpha: f64) -> Self {
        Self {
            l0: 1.0 / (1.0 + e.exp()),
            u0: 1.0 / (1.0 + (-e).exp() * n_alpha),
            l1: n_alpha / (1.0 + e.exp()),
            u1: 1.0 / (1.0 + (-e).exp()),
        }
    }

    pub fn contains(&self, p1: f64) -> bool {
        self.l1 <= p1 && p1 <= self.u1 && self.l0 <= 1.0 - p1 && 1.0 - p1 <= self.u0
    }
}

/// Envelopes for pairs with a nonempty and with an empty neighborhood intersection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeSet {
    pub nonempty_intersection: Envelope,
    pub empty_intersection: Envelope,
}

impl EnvelopeSet {
    pub fn for_pair(&self, pop: &Population, i: usize, j: usize) -> &Envelope {
        if pop.intersection_size(i, j) > 0 {
            &self.nonempty_intersection
        } else {
            &self.empty_intersection
        }
    }
}

pub fn conditional_prob_envelope(model: &ModelSpec, theta: &Theta) -> EnvelopeSet {
    let t = theta.sup_norm();
    let d = model.population().max_neighborhood() as f64;
    match model.variant() {
        Variant::Beta => {
            let e = Envelope::with_exponent(2.0 * t, 1.0);
            EnvelopeSet {
                nonempty_intersection: e,
                empty_intersection: e,
            }
        }
        Variant::Brokerage | Variant::SizeDependent => {
            let e = Envelope::with_exponent((3.0 + 2.0 * d) * t, 1.0);
            EnvelopeSet {
                nonempty_intersection: e,
                empty_intersection: e,
            }
        }
        Variant::SparseBrokerage { alpha } => {
            let n_alpha = (model.n_nodes() as f64).powf(-alpha);
            EnvelopeSet {
                nonempty_intersection: Envelope::with_exponent((3.0 + 2.0 * d) * t, 1.0),
                empty_intersection: Envelope::with_exponent((3.0 + 2.0 * d) * t, n_alpha),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn brokerage_on_n3() {
        let pop = Population::single(3);
        for code in 0..8u64 {
            let g = Graph::from_code(3, code);
            let b01 = brokerage_indicator(&g, 0, 1, &pop);
            assert_eq!(b01, code == 0b111, "code {code:03b}");
        }
        let disjoint = Population::new(&[vec![0, 1, 2], vec![3, 4, 5]], 6).unwrap();
        assert!(!brokerage_indicator(&Graph::complete(6), 0, 3, &disjoint));
    }

    #[test]
    fn suff_stats_examples() {
        let m = ModelSpec::brokerage(Population::single(3));
        assert_eq!(
            suff_stats(&triangle(), &m).to_vec(),
            vec![2.0, 2.0, 2.0, 3.0]
        );
        assert_eq!(suff_stats(&Graph::empty(3), &m).to_vec(), vec![0.0; 4]);
        let sd = ModelSpec::new(Variant::SizeDependent, Population::single(3)).unwrap();
        let s = suff_stats(&triangle(), &sd);
        assert_eq!(s.brokered, 3);
        assert_eq!(s.brokerage, Some(0.0));
        let beta = ModelSpec::beta(Population::single(3));
        assert_eq!(suff_stats(&triangle(), &beta).to_vec().len(), 3);
    }

    #[test]
    fn log_reference_examples() {
        let pop = Population::new(&[(0..5).collect(), (5..10).collect()], 10).unwrap();
        let m = ModelSpec::new(Variant::SparseBrokerage { alpha: 0.4 }, pop.clone()).unwrap();
        let g = Graph::from_edges(10, &[(0, 5), (1, 6), (0, 1)]).unwrap();
        assert!((log_reference(&g, &m) + 0.8 * 10f64.ln()).abs() < 1e-14);
        assert_eq!(log_reference(&Graph::empty(10), &m), 0.0);
        let m0 = ModelSpec::new(Variant::SparseBrokerage { alpha: 0.0 }, pop).unwrap();
        assert_eq!(log_reference(&g, &m0), 0.0);
    }

    #[test]
    fn density_examples() {
        let m = ModelSpec::brokerage(Population::single(3));
        let th = Theta::new(vec![0.0; 3], Some(0.25)).unwrap();
        assert!((log_unnormalized_density(&triangle(), &th, &m) - 0.75).abs() < 1e-15);
        let th2 = Theta::new(vec![0.3, -1.0, 2.0], Some(-0.7)).unwrap();
        assert_eq!(log_unnormalized_density(&Graph::empty(3), &th2, &m), 0.0);
    }

    #[test]
    fn conditional_examples() {
        let beta = ModelSpec::beta(Population::single(3));
        let th = Theta::new(vec![0.5, -0.5, 0.0], None).unwrap();
        assert_eq!(
            conditional_edge_prob(&Graph::empty(3), 0, 1, &th, &beta),
            0.5
        );
        let th = Theta::new(vec![3f64.ln(), 0.0, 0.0], None).unwrap();
        assert!((conditional_edge_prob(&Graph::empty(3), 0, 1, &th, &beta) - 0.75).abs() < 1e-15);

        let m = ModelSpec::brokerage(Population::single(3));
        let g = Graph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let d = edge_delta(&g, 0, 1, &m);
        assert_eq!(d.brokered, 3);
        let th = Theta::new(vec![0.0; 3], Some(1.0)).unwrap();
        assert!((conditional_edge_prob(&g, 0, 1, &th, &m) - logistic(3.0)).abs() < 1e-15);
    }

    #[test]
    fn envelope_examples() {
        let pop = Population::single(4);
        for v in [
            Variant::Brokerage,
            Variant::SizeDependent,
            Variant::SparseBrokerage { alpha: 0.3 },
        ] {
            let m = ModelSpec::new(v, pop.clone()).unwrap();
            let e = conditional_prob_envelope(&m, &Theta::zeros(&m));
            assert_eq!(
                e.nonempty_intersection,
                Envelope {
                    l0: 0.5,
                    u0: 0.5,
                    l1: 0.5,
                    u1: 0.5
                }
            );
        }
        let beta = ModelSpec::beta(pop);
        let t = 0.7;
        let th = Theta::new(vec![t, -0.2, 0.1, 0.0], None).unwrap();
        let e = conditional_prob_envelope(&beta, &th);
        assert!((e.empty_intersection.l1 - 1.0 / (1.0 + (2.0 * t).exp())).abs() < 1e-15);
    }

    #[test]
    fn theta_and_json() {
        let pop = Population::single(3);
        let m = ModelSpec::new(Variant::SparseBrokerage { alpha: 0.2 }, pop).unwrap();
        let th = Theta::from_flat(&m, &[1.0, -2.0, 0.5, 0.25]).unwrap();
        assert_eq!(th.sup_norm(), 2.0);
        assert!(Theta::from_flat(&m, &[1.0]).is_err());
        assert!(th.norm_bound_ok(2.0, 1.0, 100).unwrap());
        assert!(!th.norm_bound_ok(1.5, 1.0, 100).unwrap());
        assert!(th.norm_bound_ok(1.0, 0.4, 100).is_err());
        let js = serde_json::to_string(&m.to_json()).unwrap();
        assert!(js.starts_with(r#"{"variant":"sparse_brokerage","alpha":0.2"#));
        assert_eq!(
            ModelSpec::from_json(&serde_json::from_str(&js).unwrap()).unwrap(),
            m
        );
        assert!(ModelSpec::new(
            Variant::SparseBrokerage { alpha: 0.5 },
            Population::single(3)
        )
        .is_err());
        assert!(Variant::parse("beta", Some(0.1)).is_err());
    }

    #[test]
    fn size_weights() {
        assert_eq!(size_dependent_weight(0), 0.0);
        assert_eq!(size_dependent_weight(1), 0.0);
        assert!((size_dependent_weight(2) - (1.0 + 2f64.ln() / 2.0).ln()).abs() < 1e-15);
    }
}
