//! Numerical toolkit for half-form corrected quantization of symplectic toric
//! manifolds along Mabuchi geodesic rays.

pub mod error;
pub mod exact;
pub mod polytope;
pub mod geodesic;
pub mod potential;
pub mod quadrature;
pub mod quantization;
pub mod reduction;

pub use error::{Result, ToricError};
