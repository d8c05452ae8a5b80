//! Local max matrix norms.
//!
//! A family of matrix norms indexed by convex sets of row and column weights,
//! interpolating between the (weighted) trace norm and the max norm:
//!
//! ```text
//! ‖X‖_(R,C) = sup_{r ∈ R, c ∈ C} ‖diag(r)^½ · X · diag(c)^½‖_tr
//! ```
//!
//! The crate provides
//! - [`weights`]: the weight sets and exact linear maximization over them,
//! - [`normcore`]: certified norm evaluation and related penalties,
//! - [`trainer`]: factorized matrix completion regularized by these norms,
//! - [`data`]: synthetic low-rank data, ratings files and splits,
//! - [`oracle`]: brute-force references used for validation.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod data;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod normcore;
pub mod oracle;
pub mod scalar;
pub mod trainer;
pub mod weights;

pub use data::{
    empirical_marginals, load_ratings, load_ratings_files, simulate, split_ratings, RatingsFormat,
    Role, SampleSet, Simulation, SimulationSpec,
};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use normcore::{
    decompose_vector, local_max_norm, optimal_factorization, penalty_beta_tau, weighted_trace_norm,
    Decomposition, NormCertificate, NormOptions,
};
pub use scalar::Real;
pub use trainer::{
    evaluate, optimal_offsets, penalty_value, train, FactorModel, Loss, Metric, TrainConfig,
    TrainOutcome,
};
pub use weights::{
    dual_offset, DualOffset, LinMax, MarginalDist, SmoothingSegment, WeightDomain, WeightSet,
    Weights,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type WeightSet64 = WeightSet<f64>;
pub type WeightSet32 = WeightSet<f32>;
pub type Weights64 = Weights<f64>;
pub type MarginalDist64 = MarginalDist<f64>;
pub type NormCertificate64 = NormCertificate<f64>;
pub type SampleSet64 = SampleSet<f64>;
pub type FactorModel64 = FactorModel<f64>;
pub type TrainConfig64 = TrainConfig<f64>;
