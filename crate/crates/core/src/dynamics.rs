//! Time stepping of the shifted equation
//! `dY = [AY − a₁Y³ + Ψ(Y, Z̄_x)] dt`, `Y(0) = 0`, with `X = Y + e^{tA}x + Z`,
//! and of the λ-dissipative coupled pair driven by one noise path.
//!
//! Steps are exponential Euler: the linear flow is applied exactly through
//! Fourier multipliers and the nonlinearity is frozen over each step. `Z`
//! advances by its exact OU transition.

use serde::{Deserialize, Serialize};

use crate::besov::BesovParams;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spectral::{FourierField, GridSpec, LinearOperator, PhysicalField};
use crate::stochastic::ou_increment;
use crate::wick::{shifted_wick_physical, WickBundle, WickContext};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub a1: f64,
    pub a2: f64,
    pub grid: GridSpec,
    pub dt: f64,
    pub horizon: f64,
    pub record_stride: usize,
    pub besov: BesovParams,
    /// Hold `Z ≡ Z(0)` (zero-variance noise).
    pub frozen_noise: bool,
}

impl SimConfig {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            a1: 1.0,
            a2: 0.0,
            grid,
            dt: 1e-3,
            horizon: 5.0,
            record_stride: 100,
            besov: BesovParams::default(),
            frozen_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.a1 >= 0.0 && self.a1.is_finite()) {
            return bad(format!("a1 must be finite and >= 0, got {}", self.a1));
        }
        if !self.a2.is_finite() {
            return bad(format!("a2 must be finite, got {}", self.a2));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be >= 1".into());
        }
        Ok(())
    }

    /// Number of steps covering `[0, horizon]`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// `Y`, the noise `Z`, and the heat-flowed initial condition `V = e^{tA}x₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedState {
    pub y: FourierField,
    pub z: FourierField,
    pub x0: FourierField,
    pub v: FourierField,
    pub t: f64,
}

impl ShiftedState {
    /// `Y(0) = 0`, `Z(0) = 0`.
    pub fn new(x0: FourierField) -> Self {
        let grid = x0.grid();
        Self {
            y: FourierField::zeros(grid),
            z: FourierField::zeros(grid),
            v: x0.clone(),
            x0,
            t: 0.0,
        }
    }

    /// Starts from a prescribed noise value instead of `Z(0) = 0`.
    pub fn with_noise(x0: FourierField, z: FourierField) -> Result<Self> {
        x0.check_grid(&z)?;
        let mut s = Self::new(x0);
        s.z = z;
        Ok(s)
    }

    pub fn bundle(&self, ctx: &WickContext) -> Result<WickBundle> {
        WickBundle::new(self.z.clone(), self.t, ctx)
    }

    fn x_fourier(&self) -> FourierField {
        &(&self.y + &self.v) + &self.z
    }
}

/// `X = Y + e^{tA}x₀ + Z`.
pub fn reconstruct_x(state: &ShiftedState) -> FourierField {
    state.x_fourier()
}

/// `Ψ(Y, Z̄) = −a₁(3Y²Z̄ + 3Y:Z̄²: + :Z̄³:) + a₂(Y + Z̄)` for
/// `Z̄ = bundle.z + v`, on the physical grid.
pub fn psi_physical(
    y: &FourierField,
    bundle: &WickBundle,
    v: &FourierField,
    cfg: &SimConfig,
    ctx: &WickContext,
) -> Result<PhysicalField> {
    y.check_grid(v)?;
    y.check_grid(&bundle.z)?;
    if y.grid() != ctx.grid {
        return Err(Error::GridMismatch);
    }
    let yp = y.to_physical();
    let vp = v.to_physical();
    let zbar = bundle.z_phys.zip_with(&vp, |a, b| a + b)?;
    let zbar2 = shifted_wick_physical(bundle, &vp, 2)?;
    let zbar3 = shifted_wick_physical(bundle, &vp, 3)?;
    let (a1, a2) = (cfg.a1, cfg.a2);
    let values = (0..yp.values().len())
        .map(|i| {
            let (yy, zb) = (yp.values()[i], zbar.values()[i]);
            -a1 * (3.0 * yy * yy * zb + 3.0 * yy * zbar2.values()[i] + zbar3.values()[i])
                + a2 * (yy + zb)
        })
        .collect();
    PhysicalField::from_values(y.grid(), values)
}

/// Retained modes of [`psi_physical`].
pub fn psi(
    y: &FourierField,
    bundle: &WickBundle,
    v: &FourierField,
    cfg: &SimConfig,
    ctx: &WickContext,
) -> Result<FourierField> {
    Ok(psi_physical(y, bundle, v, cfg, ctx)?.to_fourier())
}

/// `−a₁:X³: + a₂X` pointwise; equal to `−a₁Y³ + Ψ(Y, Z̄)` when
/// `X = Y + Z̄`.
fn drift_physical(x: &PhysicalField, a1: f64, a2: f64, c: f64) -> PhysicalField {
    x.map(|v| -a1 * (v * v * v - 3.0 * c * v) + a2 * v)
}

/// `N(X + u) − N(X)` for `N(X) = −a₁:X³: + a₂X`, expanded so that it is
/// linear in `u` for small `u` without cancellation.
fn drift_difference(x: &PhysicalField, u: &PhysicalField, a1: f64, a2: f64, c: f64) -> Result<PhysicalField> {
    x.zip_with(u, |x, u| {
        -a1 * (3.0 * x * x * u + 3.0 * x * u * u + u * u * u - 3.0 * c * u) + a2 * u
    })
}

fn ensure_finite(f: &FourierField, t: f64) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteField { t })
    }
}

/// Exponential-Euler stepper with the mode multipliers of one `dt` cached.
#[derive(Clone, Debug)]
pub struct Integrator {
    cfg: SimConfig,
    ctx: WickContext,
    semigroup: Vec<f64>,
    phi: Vec<f64>,
}

impl Integrator {
    pub fn new(cfg: &SimConfig, ctx: &WickContext) -> Result<Self> {
        cfg.validate()?;
        if cfg.grid != ctx.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            cfg: *cfg,
            ctx: *ctx,
            semigroup: LinearOperator::Semigroup { t: cfg.dt }.table(cfg.grid),
            phi: LinearOperator::DampedPhiStep { dt: cfg.dt, damping: 0.0 }.table(cfg.grid),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn context(&self) -> &WickContext {
        &self.ctx
    }

    /// OU increment for one step, or `None` with frozen noise.
    pub fn draw_noise(&self, rng: &mut RngStream) -> Option<FourierField> {
        (!self.cfg.frozen_noise).then(|| ou_increment(self.cfg.grid, self.cfg.dt, rng))
    }

    /// `e^{dt A} Z + η`.
    fn advance_noise(&self, z: &FourierField, eta: Option<&FourierField>) -> Result<FourierField> {
        match eta {
            None => Ok(z.clone()),
            Some(eta) => z.combine_tables(&self.semigroup, eta, &vec![1.0; self.semigroup.len()]),
        }
    }

    fn advance(
        &self,
        state: &ShiftedState,
        x_phys: &PhysicalField,
        eta: Option<&FourierField>,
    ) -> Result<ShiftedState> {
        let forcing = drift_physical(x_phys, self.cfg.a1, self.cfg.a2, self.ctx.c_n).to_fourier();
        let t = state.t + self.cfg.dt;
        let y = state.y.combine_tables(&self.semigroup, &forcing, &self.phi)?;
        ensure_finite(&y, t)?;
        Ok(ShiftedState {
            y,
            z: self.advance_noise(&state.z, eta)?,
            x0: state.x0.clone(),
            v: state.v.map_table(&self.semigroup),
            t,
        })
    }

    /// One step driven by the given OU increment (`None`: frozen noise).
    pub fn step_with_noise(&self, state: &ShiftedState, eta: Option<&FourierField>) -> Result<ShiftedState> {
        self.advance(state, &state.x_fourier().to_physical(), eta)
    }

    pub fn step(&self, state: &ShiftedState, rng: &mut RngStream) -> Result<ShiftedState> {
        let eta = self.draw_noise(rng);
        self.step_with_noise(state, eta.as_ref())
    }

    /// Runs to the configured horizon, passing every `record_stride`-th state
    /// (including `t = 0` and the final state) to `record`.
    pub fn run(
        &self,
        mut state: ShiftedState,
        rng: &mut RngStream,
        mut record: impl FnMut(&ShiftedState) -> Result<()>,
    ) -> Result<ShiftedState> {
        let n = self.cfg.steps();
        record(&state)?;
        for i in 1..=n {
            state = self.step(&state, rng)?;
            if i % self.cfg.record_stride == 0 || i == n {
                record(&state)?;
            }
        }
        Ok(state)
    }
}

/// One exponential-Euler step of the shifted equation.
pub fn step_shifted(
    state: &ShiftedState,
    cfg: &SimConfig,
    ctx: &WickContext,
    rng: &mut RngStream,
) -> Result<ShiftedState> {
    Integrator::new(cfg, ctx)?.step(state, rng)
}

/// Two solutions `X` (from `x₀`) and `X̃` (from `x₁`) of the coupled system
/// under one noise path. The pair is stored as `X` and `u = X̃ − X`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingState {
    pub shifted: ShiftedState,
    pub u: FourierField,
    pub x1: FourierField,
    pub v1: FourierField,
    pub lambda: f64,
    /// `∫_0^t ‖X − X̃‖²_{L²} ds`.
    pub drift_cost: f64,
    pub r: f64,
    pub tau_r_hit: bool,
    pub tau_r: Option<f64>,
}

impl CouplingState {
    pub fn new(x0: FourierField, x1: FourierField, lambda: f64, r: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("R must be positive, got {r}")));
        }
        let u = x1.checked_sub(&x0)?;
        Ok(Self {
            shifted: ShiftedState::new(x0),
            u,
            v1: x1.clone(),
            x1,
            lambda,
            drift_cost: 0.0,
            r,
            tau_r_hit: false,
            tau_r: None,
        })
    }

    pub fn t(&self) -> f64 {
        self.shifted.t
    }

    pub fn x(&self) -> FourierField {
        reconstruct_x(&self.shifted)
    }

    pub fn x_tilde(&self) -> FourierField {
        &self.x() + &self.u
    }

    /// `Ỹ = X̃ − e^{tA}x₁ − Z`.
    pub fn y_tilde(&self) -> FourierField {
        &(&(&self.shifted.y + &self.u) + &self.shifted.v) - &self.v1
    }

    /// `½ ∫_0^{t∧τ_R} ‖v‖² ds` for `v = λ(X̃ − X)`.
    pub fn girsanov_energy(&self) -> f64 {
        0.5 * self.lambda * self.lambda * self.drift_cost.min(self.r)
    }
}

/// `v = λ(X̃ − X)` before `τ_R`, zero afterwards.
pub fn girsanov_drift(state: &CouplingState) -> FourierField {
    if state.tau_r_hit {
        FourierField::zeros(state.u.grid())
    } else {
        state.u.scaled(state.lambda)
    }
}

/// Stepper for the coupled pair. `Y` follows the shifted equation; `u`
/// follows `du = [(A − λ)u + N(X + u) − N(X)] dt` with its linear part
/// applied exactly.
#[derive(Clone, Debug)]
pub struct CoupledIntegrator {
    base: Integrator,
    lambda: f64,
    damped: Vec<f64>,
    damped_phi: Vec<f64>,
}

impl CoupledIntegrator {
    pub fn new(cfg: &SimConfig, ctx: &WickContext, lambda: f64) -> Result<Self> {
        let dt = cfg.dt;
        Ok(Self {
            base: Integrator::new(cfg, ctx)?,
            lambda,
            damped: LinearOperator::DampedSemigroup { t: dt, damping: lambda }.table(cfg.grid),
            damped_phi: LinearOperator::DampedPhiStep { dt, damping: lambda }.table(cfg.grid),
        })
    }

    pub fn base(&self) -> &Integrator {
        &self.base
    }

    pub fn step_with_noise(&self, state: &CouplingState, eta: Option<&FourierField>) -> Result<CouplingState> {
        if state.lambda != self.lambda {
            return Err(Error::InvalidParameter("coupling state and stepper disagree on lambda".into()));
        }
        let cfg = &self.base.cfg;
        let x_phys = state.shifted.x_fourier().to_physical();
        let u_phys = state.u.to_physical();
        let diff = drift_difference(&x_phys, &u_phys, cfg.a1, cfg.a2, self.base.ctx.c_n)?.to_fourier();
        let shifted = self.base.advance(&state.shifted, &x_phys, eta)?;
        let u = state.u.combine_tables(&self.damped, &diff, &self.damped_phi)?;
        ensure_finite(&u, shifted.t)?;
        let drift_cost = state.drift_cost + cfg.dt * u.l2_norm_sq();
        let newly_hit = !state.tau_r_hit && drift_cost >= state.r;
        Ok(CouplingState {
            v1: state.v1.map_table(&self.base.semigroup),
            tau_r_hit: state.tau_r_hit || newly_hit,
            tau_r: if newly_hit { Some(shifted.t) } else { state.tau_r },
            shifted,
            u,
            x1: state.x1.clone(),
            lambda: state.lambda,
            drift_cost,
            r: state.r,
        })
    }

    pub fn step(&self, state: &CouplingState, rng: &mut RngStream) -> Result<CouplingState> {
        let eta = self.base.draw_noise(rng);
        self.step_with_noise(state, eta.as_ref())
    }

    pub fn run(
        &self,
        mut state: CouplingState,
        rng: &mut RngStream,
        mut record: impl FnMut(&CouplingState) -> Result<()>,
    ) -> Result<CouplingState> {
        let n = self.base.cfg.steps();
        record(&state)?;
        for i in 1..=n {
            state = self.step(&state, rng)?;
            if i % self.base.cfg.record_stride == 0 || i == n {
                record(&state)?;
            }
        }
        Ok(state)
    }
}

/// One step of the coupled pair; both members consume the same increment.
pub fn step_coupled(
    state: &CouplingState,
    cfg: &SimConfig,
    ctx: &WickContext,
    rng: &mut RngStream,
) -> Result<CouplingState> {
    CoupledIntegrator::new(cfg, ctx, state.lambda)?.step(state, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriRow {
    pub t: f64,
    /// `‖Y(t)‖_{L^p}^p`.
    pub lp_pow: f64,
    /// `∫_1^t ‖Y‖_{L^p}^p ds`.
    pub lp_integral: f64,
    /// `∫_1^t ‖Y^{p−2}|∇Y|²‖_{L¹} ds`.
    pub gradient_integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub p: usize,
    pub rows: Vec<AprioriRow>,
    /// `C` with `lhs(t) ≤ C(1 + t)` over the first half of `[1, T]`.
    pub fitted_constant: f64,
    /// No later time exceeds twice the fitted majorant.
    pub linear_growth_ok: bool,
}

/// Left-hand-side quantities of the `L^p` energy estimate for `Y` along a
/// recorded trajectory, with a linear-growth majorant fitted on `[1, (1+T)/2]`.
pub fn apriori_diagnostic(traj: &[ShiftedState], p: usize) -> Result<AprioriReport> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidParameter(format!("p must be even and >= 2, got {p}")));
    }
    let horizon = traj.last().map(|s| s.t).unwrap_or(0.0);
    if horizon < 1.0 - 1e-12 {
        return Err(Error::InsufficientHorizon { horizon, required: 1.0 });
    }
    let pf = p as f64;
    let mut rows: Vec<AprioriRow> = Vec::new();
    let mut prev: Option<(f64, f64, f64)> = None;
    let (mut int_lp, mut int_grad) = (0.0, 0.0);
    for s in traj {
        let yp = s.y.to_physical();
        let lp_pow = yp.map(|v| v.abs().powf(pf)).integral();
        let g1 = s.y.partial(0).to_physical();
        let g2 = s.y.partial(1).to_physical();
        let grad = (0..yp.values().len())
            .map(|i| {
                let g = g1.values()[i].powi(2) + g2.values()[i].powi(2);
                yp.values()[i].powi(p as i32 - 2) * g
            })
            .sum::<f64>()
            * s.y.grid().cell_area();
        if s.t >= 1.0 - 1e-12 {
            if let Some((t0, l0, g0)) = prev {
                int_lp += 0.5 * (s.t - t0) * (lp_pow + l0);
                int_grad += 0.5 * (s.t - t0) * (grad + g0);
            }
            prev = Some((s.t, lp_pow, grad));
        }
        rows.push(AprioriRow {
            t: s.t,
            lp_pow,
            lp_integral: int_lp,
            gradient_integral: int_grad,
        });
    }
    let lhs = |r: &AprioriRow| r.lp_pow + r.lp_integral + r.gradient_integral;
    let split = 0.5 * (1.0 + horizon);
    let fitted_constant = rows
        .iter()
        .filter(|r| r.t >= 1.0 - 1e-12 && r.t <= split)
        .fold(0.0f64, |c, r| c.max(lhs(r) / (1.0 + r.t)));
    let linear_growth_ok = rows
        .iter()
        .filter(|r| r.t > split)
        .all(|r| lhs(r) <= 2.0 * fitted_constant * (1.0 + r.t));
    Ok(AprioriReport {
        p,
        rows,
        fitted_constant,
        linear_growth_ok,
    })
}
