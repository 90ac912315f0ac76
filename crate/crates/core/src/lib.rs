//! Rademacher-complexity bounds and estimators for one-hidden-layer graph
//! convolutional networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`graphgen`]: graphs with mandatory self-loops, circulant and
//!   Erdős–Rényi generators, degree statistics.
//! - [`spectral`]: graph filters `g(L)`, their spectral radius, filter
//!   application and neighbourhood submatrices.
//! - [`gcn_model`]: the two-layer GCN `σ(g σ(g X W1) w2)`, the norm-ball
//!   parameter class, losses and projected gradient training.
//! - [`bound_calc`]: closed-form upper, lower and generalization bounds,
//!   plus rate tables over graph families.
//! - [`rad_estimator`]: empirical Rademacher complexity estimators
//!   (closed form for linear activations, projected gradient ascent,
//!   brute-force grid search).

pub mod bound_calc;
pub mod error;
pub mod gcn_model;
pub mod graphgen;
pub mod rad_estimator;
pub mod rng;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use graphgen::{DegreeStats, Graph};
pub use sparse::CsrMatrix;
pub use spectral::{FilterKind, GraphFilter, SpectralReport};

/// Crate version embedded into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
