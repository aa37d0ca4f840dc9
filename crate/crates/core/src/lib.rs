//! Numerical toolkit for first-order hyperbolic systems with rough
//! time-dependent coefficients: dyadic spectral analysis, Zygmund-class
//! seminorms and mollification, a two-level microlocal symmetrizer, and
//! per-Fourier-mode energy experiments.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod littlewood_paley;
pub mod paradiff;
pub mod spectral;
pub mod symbol;
pub mod wave;
pub mod symmetrizer;
pub mod zygmund;

pub use error::{CoreError, Result};
pub use spectral::{MatrixFunction, SampledFunction, C64};
