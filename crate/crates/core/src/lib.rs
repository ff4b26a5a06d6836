//! Tempered fractional reaction–diffusion on the unit interval.
//!
//! Spatial discretisation is a Galerkin method with piecewise-linear hat
//! functions; the nonlocal stiffness matrix is assembled from pointwise
//! tempered fractional derivatives of the basis. Time stepping uses the
//! second-order, L-stable exponential time differencing scheme built on the
//! real-distinct-poles rational approximation of the exponential
//! (`ETD-RDP`), with Crank–Nicolson plus Newton iteration as the baseline.

pub mod error;
pub mod fem;
pub mod field;
pub mod oracle;
pub mod problems;
pub mod quadrature;
pub mod specfun;
pub mod steppers;
pub mod tfrac;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
