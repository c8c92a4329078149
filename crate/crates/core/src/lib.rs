//! Generalized β-models for random graphs with dependent edges: exact small-graph
//! oracles, Gibbs sampling, maximum pseudo-likelihood estimation, dependence
//! diagnostics and a simulation harness.
//!
//! Node ids are 0-based throughout the library API; every file format is 1-based.

pub mod diagnostics;
pub mod edge;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod graph;
pub mod math;
pub mod models;
pub mod population;
pub mod rng;
pub mod sampler;
pub mod state;

pub use edge::EdgeIndex;
pub use error::{Error, Result};
pub use estimator::{fit_mple, mle_beta, FitOptions, FitResult, FitStatus};
pub use graph::Graph;
pub use models::{ModelSpec, SuffStats, Theta, Variant};
pub use population::{build_population, Population};
pub use sampler::{
    enumerate_exact, gibbs_sample, sample_beta_exact, EnumerationResult, GibbsConfig, ScanOrder,
};
pub use state::GraphState;
