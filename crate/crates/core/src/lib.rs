//! Integral-equation machinery for the 1D heat equation.
//!
//! The crate is organized bottom-up:
//!
//! - [`cheb`]: piecewise Chebyshev interpolants, the spatial currency of
//!   every other module.
//! - [`soe`]: sum-of-exponentials tables approximating the Gaussian kernel.
//! - [`fgt`]: fast Gauss transforms (discrete, continuous, periodic, and a
//!   small-time series path) built on the SOE recursion sweeps.
//! - [`quadrature`]: singular time quadrature for layer potentials — the
//!   asymptotic head plus exponentially graded tail meshes.
//! - [`volterra`]: boundary-density solver for the second-kind Volterra
//!   system on a moving interval.
//! - [`marching`]: double-layer potential evaluation and the O(N)
//!   bootstrapped time marcher.
//! - [`solvers`]: end-to-end drivers (periodic forced, Dirichlet moving
//!   boundary, Stefan).
//! - [`oracle`]: slow adaptive reference quadrature backing the test suite.

pub mod cheb;
pub mod domain;
pub mod fgt;
pub mod marching;
mod error;
pub mod oracle;
pub mod quadrature;
pub mod soe;
pub mod solvers;
pub mod volterra;
mod special;

pub use error::{Error, Result};
