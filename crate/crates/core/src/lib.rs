//! Solvers for the one-dimensional time-fractional subdiffusion equation
//!
//! ```text
//! ∂_t^β u = μ ∂_x² u + f,   x ∈ (-1, 1),   u(±1, t) = 0,   u(x, 0) = u₀(x)
//! ```
//!
//! with a Caputo derivative of order `β ∈ (0, 1)`. Time is discretized by
//! convolution quadrature generated by `(1 - z)^β` (first order, or second
//! order through the shifted weighting `u^{k-β/2}`), space by a
//! Legendre–Galerkin spectral method.
//!
//! Modules:
//! - [`fracweights`]: CQ weights, their inverse sequence and the discrete Grönwall kernel.
//! - [`mlf`]: Mittag–Leffler function on the non-negative axis.
//! - [`legendre`]: LGL grid, the Dirichlet modal basis, mass/stiffness, interpolation and projection.
//! - [`stepper`]: the linear and semi-implicit time-stepping schemes.
//! - [`inequality_lab`]: numerical checks of the discrete fractional Grönwall machinery.
//! - [`harness`]: convergence studies, manufactured solutions and reports.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fracweights;
pub mod harness;
pub mod inequality_lab;
pub mod legendre;
pub mod linalg;
pub mod mlf;
pub mod stepper;

pub use error::{Error, Result};
pub use fracweights::CoefficientTable;
pub use legendre::{SpectralFunction, SpectralSpace};
pub use mlf::MittagLefflerParams;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
