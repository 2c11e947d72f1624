//! Clustering as constrained matrix factorization.
//!
//! Samples are the columns of an `n_features × n_samples` data matrix `X`.
//! Crisp k-means approximates `X ≈ M Z` with a one-hot assignment matrix `Z`;
//! fuzzy c-means approximates `X ≈ M U^(m)` where `U^(m)` is the elementwise
//! power of a column-stochastic membership matrix. The robust variants swap
//! the squared Frobenius loss for the ℓ1,2 norm (sum of residual column
//! norms) and minimize it by iteratively reweighted least squares.
//!
//! All fitters are deterministic functions of their input and config; the
//! random generator is ChaCha8 seeded from a `u64`.

pub mod data;
pub mod error;
pub mod fcm;
pub mod init;
pub mod kmeans;
pub mod model;
pub mod robust_fcm;
pub mod robust_kmeans;
pub mod solver;

mod linalg;

pub use error::{ClusterError, Result};
pub use fcm::{fit_fcm, FcmConfig, FcmFit, FcmSolver};
pub use init::{InitKind, InitStrategy};
pub use kmeans::{fit_kmeans, KMeansConfig, KMeansFit, KMeansSolver};
pub use model::{
    AssignmentMatrix, Centroids, DataMatrix, FitReport, MembershipMatrix, ResidualWeights,
    SurrogatePass, Termination,
};
pub use robust_fcm::{fit_robust_fcm, RobustFcmConfig, RobustFcmSolver};
pub use robust_kmeans::{
    fit_robust_kmeans, CentroidWeighting, RobustKMeansConfig, RobustKMeansSolver,
};
pub use solver::{IterativeSolver, StepOutcome};
