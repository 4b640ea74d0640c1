//! Robust sparse regression under heavy-tailed designs and noise.
//!
//! The central solver is iterative hard thresholding driven by an
//! element-wise median-of-means gradient ([`solvers::right_solve`]). Around it
//! sit a truncated-moment Dantzig selector for initialization, baseline
//! solvers (Lasso, adaptive Huber, shrinkage), seeded heavy-tailed samplers
//! and a Monte-Carlo harness that fits log-log error slopes.

pub mod baselines;
pub mod cli;
pub mod dantzig;
pub mod data;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod models;
pub mod mom;
pub mod samplers;
pub mod solvers;
pub mod stats;
pub mod tuning;

pub use data::{Dataset, MultiResponseDataset, Observations};
pub use error::{Error, Result};
pub use linalg::{hard_threshold, row_hard_threshold, DenseMatrix, DenseVector, Parameter, SupportSet};
pub use models::Model;
pub use mom::{BlockPartition, GradientOracle, MeanOracle, MomOracle, OracleKind};
pub use samplers::{Distribution, DistributionSpec, RngStream};

pub use solvers::{iht_solve, right_solve, RightConfig, SolveResult};
