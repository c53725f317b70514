//! Gaussian free field samples and the stochastic convolution
//! `Z(t) = ∫_0^t e^{(t−s)A} dW(s)`, advanced by its exact per-mode
//! Ornstein–Uhlenbeck transition.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spectral::{eigenvalue, FourierField, GridSpec, LinearOperator, Mode};

/// Stationary variance `E|z_k|² = 1/(2(|k|²+1))` of the mode `k` under
/// `μ = N(0, ½(−Δ+1)^{-1})`.
pub fn mode_variance(k: Mode) -> f64 {
    0.5 / eigenvalue(k)
}

/// Variance `(1 − e^{−2λ dt}) / (2λ)` of the OU increment over `dt`.
pub fn increment_variance(k: Mode, dt: f64) -> f64 {
    let lambda = eigenvalue(k);
    -(-2.0 * lambda * dt).exp_m1() / (2.0 * lambda)
}

/// Mode variance after one exact OU step of length `dt` from variance `prev`.
pub fn propagated_variance(k: Mode, dt: f64, prev: f64) -> f64 {
    (-2.0 * eigenvalue(k) * dt).exp() * prev + increment_variance(k, dt)
}

/// Centered Gaussian field with independent modes and `E|c_k|² = variance(k)`.
///
/// Half-space modes get independent real and imaginary parts, each of
/// variance `variance(k)/2`; `k = 0` (the only self-conjugate retained mode)
/// is real with the full variance. Draw order is fixed by storage order.
pub fn sample_gaussian(
    grid: GridSpec,
    rng: &mut RngStream,
    variance: impl Fn(Mode) -> f64,
) -> FourierField {
    FourierField::from_fn(grid, |k| {
        let v = variance(k);
        if k == [0, 0] {
            Complex64::new(v.sqrt() * rng.standard_normal(), 0.0)
        } else {
            let s = (0.5 * v).sqrt();
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            Complex64::new(s * re, s * im)
        }
    })
}

/// A draw from the Gaussian free field `μ`.
pub fn sample_gff(grid: GridSpec, rng: &mut RngStream) -> FourierField {
    sample_gaussian(grid, rng, mode_variance)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuState {
    pub z: FourierField,
    pub t: f64,
    pub stationary: bool,
}

impl OuState {
    /// `Z(0) = 0`.
    pub fn at_rest(grid: GridSpec) -> Self {
        Self {
            z: FourierField::zeros(grid),
            t: 0.0,
            stationary: false,
        }
    }
}

/// Noise part `η` of one exact OU step.
pub fn ou_increment(grid: GridSpec, dt: f64, rng: &mut RngStream) -> FourierField {
    sample_gaussian(grid, rng, |k| increment_variance(k, dt))
}

/// `e^{dt A} z + η`.
pub fn ou_propagate(z: &FourierField, dt: f64, eta: &FourierField) -> Result<FourierField> {
    LinearOperator::Semigroup { t: dt }.apply(z).checked_add(eta)
}

/// Exact transition of `dZ = AZ dt + dW` over `dt`.
pub fn ou_step_exact(state: &OuState, dt: f64, rng: &mut RngStream) -> Result<OuState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let eta = ou_increment(state.z.grid(), dt, rng);
    Ok(OuState {
        z: ou_propagate(&state.z, dt, &eta)?,
        t: state.t + dt,
        stationary: state.stationary,
    })
}

/// `Z₁(t) = ∫_{−∞}^t e^{(t−s)A} dW(s)` at a single time: a `μ`-distributed state.
pub fn sample_stationary_ou(grid: GridSpec, rng: &mut RngStream) -> OuState {
    OuState {
        z: sample_gff(grid, rng),
        t: 0.0,
        stationary: true,
    }
}

/// `V(t) = e^{tA} x`.
pub fn heat_drift(x: &FourierField, t: f64) -> FourierField {
    if t == 0.0 {
        return x.clone();
    }
    LinearOperator::Semigroup { t }.apply(x)
}
