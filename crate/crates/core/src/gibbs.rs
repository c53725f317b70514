//! Sampling the cutoff Gibbs measure `ν_N ∝ e^{−U} μ`,
//! `U(φ) = ½∫(a₁:φ⁴: − 2a₂:φ²:)dξ`, by preconditioned Crank–Nicolson, and
//! the integration-by-parts check for the logarithmic derivative `β_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spectral::{FourierField, LinearOperator, PhysicalField};
use crate::stats::{batch_means_se, mean};
use crate::stochastic::sample_gff;
use crate::wick::{wick_polynomial, WickContext};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsTarget {
    pub a1: f64,
    pub a2: f64,
    pub ctx: WickContext,
}

impl GibbsTarget {
    pub fn new(a1: f64, a2: f64, ctx: WickContext) -> Result<Self> {
        if !(a1 >= 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(Error::InvalidParameter(format!("need a1 >= 0 and finite a2, got ({a1}, {a2})")));
        }
        Ok(Self { a1, a2, ctx })
    }

    /// `U` by quadrature of grid values.
    pub fn potential_physical(&self, f: &PhysicalField) -> f64 {
        let c = self.ctx.c_n;
        let density: f64 = f
            .values()
            .iter()
            .map(|&x| self.a1 * wick_polynomial(4, c, x) - 2.0 * self.a2 * (x * x - c))
            .sum();
        0.5 * density * f.grid().cell_area()
    }

    pub fn potential(&self, f: &FourierField) -> f64 {
        self.potential_physical(&f.to_physical())
    }

    /// `β_k(f) = 2⟨f, Ak⟩ − 2⟨a₁:f³: − a₂f, k⟩`.
    pub fn log_derivative(&self, f: &FourierField, k: &FourierField) -> Result<f64> {
        let gaussian = f.inner(&LinearOperator::Generator.apply(k))?;
        let c = self.ctx.c_n;
        let force = f
            .to_physical()
            .map(|x| self.a1 * (x * x * x - 3.0 * c * x) - self.a2 * x);
        let nonlinear = force.pairing(&k.to_physical())?;
        Ok(2.0 * gaussian - 2.0 * nonlinear)
    }
}

pub fn potential(f: &FourierField, target: &GibbsTarget) -> f64 {
    target.potential(f)
}

pub fn log_derivative(f: &FourierField, k: &FourierField, target: &GibbsTarget) -> Result<f64> {
    target.log_derivative(f, k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsChain {
    pub current: FourierField,
    current_potential: f64,
    pub step_size: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl GibbsChain {
    pub fn new(start: FourierField, step_size: f64, target: &GibbsTarget) -> Result<Self> {
        if !(step_size > 0.0 && step_size < 1.0) {
            return Err(Error::InvalidParameter(format!("step size must lie in (0, 1), got {step_size}")));
        }
        Ok(Self {
            current_potential: target.potential(&start),
            current: start,
            step_size,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// One pCN move `φ′ = √(1−s²)φ + sξ`, `ξ ~ μ`, accepted with
    /// probability `min(1, e^{U(φ) − U(φ′)})`. Returns whether it was accepted.
    pub fn step(&mut self, target: &GibbsTarget, rng: &mut RngStream) -> bool {
        let s = self.step_size;
        let xi = sample_gff(self.current.grid(), rng);
        let proposal = self
            .current
            .scaled((1.0 - s * s).sqrt())
            .axpy(s, &xi)
            .expect("same grid");
        let u = target.potential(&proposal);
        let log_ratio = self.current_potential - u;
        // the uniform is drawn unconditionally to keep the stream layout fixed
        let draw = rng.uniform();
        self.proposed += 1;
        let accept = log_ratio >= 0.0 || draw < log_ratio.exp();
        if accept {
            self.current = proposal;
            self.current_potential = u;
            self.accepted += 1;
        }
        accept
    }

    /// Adapts `log s` towards `target_rate` acceptance in batches of 100
    /// steps, then resets the counters.
    pub fn warm_up(&mut self, target: &GibbsTarget, steps: usize, target_rate: f64, rng: &mut RngStream) {
        let batch = 100;
        let mut log_s = self.step_size.ln();
        for b in 0..steps.div_ceil(batch) {
            let n = batch.min(steps - b * batch);
            let mut acc = 0;
            for _ in 0..n {
                acc += self.step(target, rng) as usize;
            }
            let rate = acc as f64 / n as f64;
            log_s += (rate - target_rate) / (1.0 + b as f64).sqrt();
            self.step_size = log_s.exp().clamp(1e-4, 0.999);
            log_s = self.step_size.ln();
        }
        self.accepted = 0;
        self.proposed = 0;
    }
}

/// One pCN step on a chain passed by value.
pub fn pcn_step(mut chain: GibbsChain, target: &GibbsTarget, rng: &mut RngStream) -> GibbsChain {
    chain.step(target, rng);
    chain
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    /// Steps discarded before sampling; the first `warmup` of them adapt
    /// the step size.
    pub burn_in: usize,
    pub warmup: usize,
    pub thin: usize,
    pub initial_step: f64,
    pub target_acceptance: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            warmup: 5_000,
            thin: 10,
            initial_step: 0.5,
            target_acceptance: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub step_size: f64,
    pub acceptance: f64,
    pub samples: usize,
}

/// Draws `n` thinned samples after burn-in, starting from a `μ` draw, and
/// hands each to `sink`.
pub fn run_chain(
    target: &GibbsTarget,
    settings: &SamplerSettings,
    n: usize,
    rng: &mut RngStream,
    mut sink: impl FnMut(&FourierField) -> Result<()>,
) -> Result<ChainSummary> {
    if settings.thin == 0 {
        return Err(Error::InvalidParameter("thin must be >= 1".into()));
    }
    let start = sample_gff(target.ctx.grid, rng);
    let mut chain = GibbsChain::new(start, settings.initial_step, target)?;
    let warm = settings.warmup.min(settings.burn_in);
    chain.warm_up(target, warm, settings.target_acceptance, rng);
    for _ in warm..settings.burn_in {
        chain.step(target, rng);
    }
    chain.accepted = 0;
    chain.proposed = 0;
    for _ in 0..n {
        for _ in 0..settings.thin {
            chain.step(target, rng);
        }
        sink(&chain.current)?;
    }
    Ok(ChainSummary {
        step_size: chain.step_size,
        acceptance: chain.acceptance_rate(),
        samples: n,
    })
}

/// [`run_chain`] collected into memory.
pub fn sample_gibbs(
    target: &GibbsTarget,
    settings: &SamplerSettings,
    n: usize,
    rng: &mut RngStream,
) -> Result<(Vec<FourierField>, ChainSummary)> {
    let mut out = Vec::with_capacity(n);
    let summary = run_chain(target, settings, n, rng, |f| {
        out.push(f.clone());
        Ok(())
    })?;
    Ok((out, summary))
}

/// Cylinder test functionals `u(z) = g(⟨l₁,z⟩, …)` with `g` smooth and
/// bounded.
#[derive(Clone, Debug, PartialEq)]
pub enum CylinderFunctional {
    Constant,
    /// `sin(⟨l, z⟩)`.
    Sin(FourierField),
    /// `exp(−(⟨l₁,z⟩² + ⟨l₂,z⟩²)/2)`.
    Bump(FourierField, FourierField),
}

impl CylinderFunctional {
    pub fn value(&self, z: &FourierField) -> Result<f64> {
        Ok(match self {
            Self::Constant => 1.0,
            Self::Sin(l) => z.inner(l)?.sin(),
            Self::Bump(l1, l2) => {
                let (a, b) = (z.inner(l1)?, z.inner(l2)?);
                (-0.5 * (a * a + b * b)).exp()
            }
        })
    }

    /// Directional derivative `∂u/∂k`.
    pub fn derivative(&self, z: &FourierField, k: &FourierField) -> Result<f64> {
        Ok(match self {
            Self::Constant => 0.0,
            Self::Sin(l) => z.inner(l)?.cos() * l.inner(k)?,
            Self::Bump(l1, l2) => {
                let (a, b) = (z.inner(l1)?, z.inner(l2)?);
                -(-0.5 * (a * a + b * b)).exp() * (a * l1.inner(k)? + b * l2.inner(k)?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpReport {
    /// `E[∂u/∂k]`.
    pub lhs: f64,
    /// `−E[β_k u]`.
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    /// Batch-means error of `∂u/∂k + β_k u`, which accounts for the
    /// correlation of the two sides.
    pub combined_se: f64,
    pub z_score: f64,
}

impl IbpReport {
    pub fn passed(&self, sigmas: f64) -> bool {
        self.z_score.abs() <= sigmas
    }
}

/// Monte Carlo estimate of both sides of `∫ ∂u/∂k dν = −∫ β_k u dν`.
pub fn ibp_test(
    samples: &[FourierField],
    k: &FourierField,
    u: &CylinderFunctional,
    target: &GibbsTarget,
) -> Result<IbpReport> {
    let mut left = Vec::with_capacity(samples.len());
    let mut right = Vec::with_capacity(samples.len());
    for z in samples {
        left.push(u.derivative(z, k)?);
        right.push(-target.log_derivative(z, k)? * u.value(z)?);
    }
    let diff: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l - r).collect();
    let combined_se = batch_means_se(&diff);
    if !(combined_se > 0.0) {
        return Err(Error::DegenerateTest(format!(
            "vanishing variance of the integration-by-parts residual ({combined_se})"
        )));
    }
    Ok(IbpReport {
        lhs: mean(&left),
        rhs: mean(&right),
        lhs_se: batch_means_se(&left),
        rhs_se: batch_means_se(&right),
        combined_se,
        z_score: mean(&diff) / combined_se,
    })
}
