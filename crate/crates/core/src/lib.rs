//! Spectral Galerkin simulation of the renormalized Φ⁴₂ stochastic
//! quantization equation on the torus `[0, 2π)²`.

pub mod besov;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod gibbs;
pub mod harness;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod stochastic;
pub mod wick;

pub use error::{Error, Result};
