//! Co-determination reputation algorithms on sparse user/object rating data.
//!
//! The crate provides
//!
//! * a sparse bipartite rating store ([`RatingDataset`]),
//! * generators for artificial datasets with uniform true qualities, per-user
//!   error levels and optional integer quantization ([`synthgen`]),
//! * four aggregation algorithms: arithmetic average, Mizzaro, YZLM and dKVD
//!   ([`algorithms`]),
//! * evaluation metrics: quality RMSE, Kendall's τ_b and ROC AUC ([`metrics`]),
//! * Monte Carlo sweeps over error level and rating resolution ([`experiments`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.
//!
//! ```
//! use coderank::{AlgorithmConfig, AlgorithmKind, GeneratorConfig, RatingMode};
//!
//! let config = GeneratorConfig {
//!     num_users: 100,
//!     num_objects: 100,
//!     sigma_max: 1.0,
//!     mode: RatingMode::Discrete,
//!     seed: 3,
//!     ..GeneratorConfig::default()
//! };
//! let (data, truth) = coderank::synthgen::generate::<f64>(&config).unwrap();
//! let pruned = coderank::prune_isolated(&data, &truth).unwrap();
//! let result = coderank::run_algorithm(&pruned.dataset, &AlgorithmConfig::new(AlgorithmKind::Yzlm)).unwrap();
//! let report = coderank::evaluate(&result, &pruned.truth, pruned.dataset.scale()).unwrap();
//! assert!(report.delta_q_normalized < 0.2);
//! ```

pub mod algorithms;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod scalar;
pub mod synthgen;

pub use algorithms::{run_aa, run_algorithm, run_algorithm_from, AlgorithmConfig, AlgorithmKind};
pub use dataset::{prune_isolated, IndexMaps, Pruned, RatingMode, RatingScale};
pub use error::{Error, Result};
pub use experiments::{ExperimentSpec, PopulationConfig, SigmaMinRule, Sweep, SweepVariable};
pub use metrics::{evaluate, evaluate_with};
pub use scalar::Scalar;
pub use synthgen::GeneratorConfig;

pub type RatingDataset = dataset::RatingDataset<f64>;
pub type GroundTruth = dataset::GroundTruth<f64>;
pub type ReputationResult = algorithms::ReputationResult<f64>;
pub type MetricsReport = metrics::MetricsReport<f64>;
pub type SweepRow = experiments::SweepRow<f64>;
pub type SweepResult = experiments::SweepResult<f64>;
pub type Aggregate = experiments::Aggregate<f64>;
pub type MetricSummary = experiments::MetricSummary<f64>;

pub type RatingDataset32 = dataset::RatingDataset<f32>;
pub type ReputationResult32 = algorithms::ReputationResult<f32>;
