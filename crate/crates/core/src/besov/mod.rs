//! Littlewood–Paley blocks, Besov/Hölder/Sobolev norms and the trajectory
//! quantities built from them.
//!
//! Blocks are sharp Euclidean annuli: `Δ_{-1}` keeps `k = 0` and `Δ_j`,
//! `j ≥ 0`, keeps `2^j ≤ |k| < 2^{j+1}`. Every retained mode belongs to
//! exactly one block.

mod trajectory;
mod verify;

use serde::{Deserialize, Serialize};

use crate::spectral::{norm_sq, FourierField, GridSpec, LinearOperator, Mode};

pub use trajectory::{event_indicator, NormSample, NormTrace, TrajectoryNorm};
pub use verify::{
    random_test_field, verify_embedding, verify_interpolation, verify_multiplication,
    verify_schauder, verify_schauder_difference, ExactCheck, VerifierReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64) -> Self {
        Self { alpha, p, q }
    }

    /// `𝒞^α = B^α_{∞,∞}`.
    pub fn holder(alpha: f64) -> Self {
        Self::new(alpha, f64::INFINITY, f64::INFINITY)
    }
}

impl Default for BesovParams {
    fn default() -> Self {
        Self::holder(-0.05)
    }
}

/// Dyadic block containing `k`.
pub fn block_index(k: Mode) -> i32 {
    let r2 = norm_sq(k);
    if r2 == 0 {
        return -1;
    }
    // largest j with 4^j <= |k|²
    let mut j = 0;
    while 4i64.pow(j as u32 + 1) <= r2 {
        j += 1;
    }
    j
}

/// Highest block index occupied on the grid.
pub fn max_block(grid: GridSpec) -> i32 {
    let n = grid.cutoff() as i64;
    block_index([n, n])
}

/// `Δ_j f`.
pub fn lp_block(f: &FourierField, j: i32) -> FourierField {
    f.map_symbol(|k| if block_index(k) == j { 1.0 } else { 0.0 })
}

/// `(Σ_j (2^{jα} ‖Δ_j f‖_{L^p})^q)^{1/q}`, supremum over `j` when `q = ∞`.
pub fn besov_norm(f: &FourierField, params: &BesovParams) -> f64 {
    let weighted = (-1..=max_block(f.grid())).map(|j| {
        let block = lp_block(f, j);
        if block.is_zero() {
            0.0
        } else {
            2f64.powf(j as f64 * params.alpha) * block.to_physical().lp_norm(params.p)
        }
    });
    if params.q.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        weighted
            .map(|w| w.powf(params.q))
            .sum::<f64>()
            .powf(1.0 / params.q)
    }
}

/// `‖f‖_{𝒞^α}`.
pub fn holder_norm(f: &FourierField, alpha: f64) -> f64 {
    besov_norm(f, &BesovParams::holder(alpha))
}

/// `‖Λ^s f‖_{L^p}`.
pub fn sobolev_norm(f: &FourierField, s: f64, p: f64) -> f64 {
    LinearOperator::Bessel { s }
        .apply(f)
        .to_physical()
        .lp_norm(p)
}
