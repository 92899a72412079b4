//! Tree-informed nested latent class models for multi-source domain
//! adaptation on multivariate binary data.
//!
//! The crate is organised bottom-up:
//!
//! * [`tree`]: rooted weighted trees for the domain and cause hierarchies.
//! * [`dataset`]: binary response data with per-entry missingness.
//! * [`model`]: parameter containers, stick-breaking, the Jaakkola–Jordan
//!   bound and log-joint evaluation.
//! * [`vi`]: the coordinate-ascent variational algorithm.
//! * [`metrics`]: CSMF accuracy, top-cause accuracy, cophenetic dissimilarity.
//! * [`sim`]: synthetic data generators and the masking harness.

pub mod dataset;
pub mod math;
pub mod metrics;
pub mod model;
pub mod sim;
pub mod tree;
pub mod vi;

pub use dataset::{Dataset, DatasetError, MissingnessScenario, Scenario};
pub use tree::{NodeRow, RootedWeightedTree, TreeError};
