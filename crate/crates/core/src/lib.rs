//! Information projections onto classical discrete models and the expected
//! divergences of Dirichlet-distributed distributions from them.
//!
//! - [`special`]: harmonic numbers, digamma and log-gamma.
//! - [`simplex`]: state spaces, pmfs, Dirichlet priors, partitions.
//! - [`models`] and [`junction`]: model families and their projections.
//! - [`expectation`]: closed-form expectations under Dirichlet priors.
//! - [`montecarlo`]: reproducible sampling, estimators and experiments.
//! - [`selftest`]: the acceptance checks shared by tests and the CLI.

pub mod error;
pub mod expectation;
pub mod junction;
pub mod models;
pub mod montecarlo;
pub mod selftest;
pub mod simplex;
pub mod special;

pub use error::{Error, Result};
pub use expectation::{ExpectationResult, FormulaId};
pub use junction::{JunctionEdge, JunctionTree, JunctionTreeViolation};
pub use models::{CylinderBlock, CylinderPartition, ModelDoc, ModelSpec, ProjectionResult};
pub use montecarlo::{McConfig, McEstimate, SampleStream, DEFAULT_SEED};
pub use simplex::{
    entropy, kl_divergence, DirichletPrior, Divergence, Partition, Pmf, ReferenceMeasure,
    StateSpace,
};
