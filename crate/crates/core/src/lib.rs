//! Numerical laboratory for sharp multimarginal entropy inequalities: Gaussian
//! saturation of the constant, Wasserstein barycenters, multimarginal
//! transport, the dual functional inequality and its geometric corollary.

pub mod cli;
pub mod couplings;
pub mod error;
pub mod functional;
pub mod gaussian;
pub mod grid;
pub mod linalg;
pub mod optim;
pub mod report;
pub mod sharp_constant;
pub mod suite;

pub use error::{Error, Result};
