//! Degenerate Schrödinger equation with fractional boundary damping, solved
//! through its diffusive (augmented) realization.
//!
//! Modules, bottom up:
//! - [`model`]: parameters, derived constants and the degeneracy branch.
//! - [`kernel`]: the diffusive quadrature, its certification and the node ODEs.
//! - [`oracle`]: a direct convolution for the exponential fractional integral.
//! - [`operator`]: flux-form discretization of `(x^α ψ_x)_x`.
//! - [`evolution`]: the implicit midpoint integrator, energy audit and decay fit.
//! - [`spectral`]: Bessel functions, the characteristic equation, the discrete
//!   generator and resolvent norms.
//! - [`config`]: run configuration files and overrides.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evolution;
pub mod kernel;
pub mod model;
pub mod numerics;
pub mod operator;
pub mod oracle;
pub mod spectral;
pub mod tridiag;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use kernel::{build_quadrature, DiffusiveQuadrature, MemoryState};
pub use model::{BcBranch, GridConfig, ModelConfig};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
