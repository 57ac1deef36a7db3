//! Damped transport, two-tensor calculus and divergence checks on the path
//! space of an embedded Riemannian manifold.
//!
//! Paths are simulated with a geodesic Euler scheme on `S^n`, `R^n` or the
//! flat torus. Along each path the crate builds damped parallel transport
//! `W`, the Cameron–Martin type fields it generates, the two-tensor
//! operators `Q` and `𝐑`, and the operator view of two-tensors. Monte Carlo
//! drivers then test integration-by-parts identities on cylindrical forms.

pub mod cylinder;
pub mod damped;
pub mod divergence;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod manifold;
pub mod mc;
pub mod operator;
pub mod path;
pub mod rng;
pub mod two_tensor;

pub use error::{Error, Result};
