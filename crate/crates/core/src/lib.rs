//! Derivative-free trust-region optimisation with radial basis function
//! surrogates.
//!
//! The solver keeps an interpolation set whose affine part is close to a
//! regular simplex, fits an RBF model with a linear tail through it, and
//! optionally shapes the trust region as an ellipsoid that follows the
//! filtered model curvature.

pub mod ellipsoid;
pub mod error;
pub mod geometry;
pub mod set_management;
pub mod solver;
pub mod surrogate;
pub mod testbed;

pub use error::{Error, Result};
