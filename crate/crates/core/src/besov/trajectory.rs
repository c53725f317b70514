use serde::{Deserialize, Serialize};

use super::{holder_norm, BesovParams};
use crate::error::{Error, Result};
use crate::spectral::FourierField;
use crate::wick::WickBundle;

/// Hölder norms `(‖Z‖_α, ‖:Z²:‖_α, ‖:Z³:‖_α)` at one recorded time. Wick
/// powers are measured after truncation to the retained band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub z: f64,
    pub z2: f64,
    pub z3: f64,
}

impl NormSample {
    pub fn from_bundle(bundle: &WickBundle, params: &BesovParams) -> Self {
        let norm = |f: &FourierField| super::besov_norm(f, params);
        Self {
            t: bundle.t,
            z: norm(&bundle.z),
            z2: norm(&bundle.z2_truncated()),
            z3: norm(&bundle.z3_truncated()),
        }
    }

    pub fn from_bundle_holder(bundle: &WickBundle, alpha: f64) -> Self {
        Self {
            t: bundle.t,
            z: holder_norm(&bundle.z, alpha),
            z2: holder_norm(&bundle.z2_truncated(), alpha),
            z3: holder_norm(&bundle.z3_truncated(), alpha),
        }
    }

    fn integrand(&self, gamma: f64) -> f64 {
        self.z.powf(gamma) + self.z2.powf(gamma) + self.z3.powf(gamma)
    }
}

/// Running suprema defining `‖Z‖_{𝔏_T}`:
/// `sup_t (‖Z‖_α, t^δ ‖:Z²:‖_α, t^δ ‖:Z³:‖_α)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryNorm {
    pub sup_z_alpha: f64,
    pub sup_t_delta_z2: f64,
    pub sup_t_delta_z3: f64,
    pub delta: f64,
}

impl TrajectoryNorm {
    pub fn new(delta: f64) -> Self {
        Self {
            sup_z_alpha: 0.0,
            sup_t_delta_z2: 0.0,
            sup_t_delta_z3: 0.0,
            delta,
        }
    }

    pub fn update(&self, sample: &NormSample) -> Self {
        let w = if sample.t > 0.0 {
            sample.t.powf(self.delta)
        } else {
            0.0
        };
        Self {
            sup_z_alpha: self.sup_z_alpha.max(sample.z),
            sup_t_delta_z2: self.sup_t_delta_z2.max(w * sample.z2),
            sup_t_delta_z3: self.sup_t_delta_z3.max(w * sample.z3),
            delta: self.delta,
        }
    }

    pub fn update_with_bundle(&self, bundle: &WickBundle, params: &BesovParams) -> Self {
        self.update(&NormSample::from_bundle(bundle, params))
    }

    /// `‖Z‖_{𝔏_T}`, the largest of the three suprema.
    pub fn value(&self) -> f64 {
        self.sup_z_alpha
            .max(self.sup_t_delta_z2)
            .max(self.sup_t_delta_z3)
    }
}

/// Recorded norm samples of one trajectory, in increasing time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormTrace {
    pub samples: Vec<NormSample>,
}

impl NormTrace {
    pub fn push(&mut self, sample: NormSample) {
        debug_assert!(self.samples.last().is_none_or(|s| s.t <= sample.t));
        self.samples.push(sample);
    }

    pub fn horizon(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// `‖Z‖_{𝔏_T}` over the recorded times `t <= t_max`.
    pub fn l_norm(&self, t_max: f64, delta: f64) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.t <= t_max + 1e-12)
            .fold(TrajectoryNorm::new(delta), |acc, s| acc.update(s))
            .value()
    }

    /// `(t, ∫_1^t [‖Z‖^γ + ‖:Z²:‖^γ + ‖:Z³:‖^γ] ds)` at every recorded
    /// `t >= 1`, trapezoidal rule on the recording grid.
    pub fn running_integrals(&self, gamma: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut prev: Option<&NormSample> = None;
        let mut acc = 0.0;
        for s in self.samples.iter().filter(|s| s.t >= 1.0 - 1e-12) {
            if let Some(p) = prev {
                acc += 0.5 * (s.t - p.t) * (s.integrand(gamma) + p.integrand(gamma));
            }
            out.push((s.t, acc));
            prev = Some(s);
        }
        out
    }

    fn check_horizon(&self) -> Result<()> {
        if self.horizon() < 1.0 - 1e-12 {
            Err(Error::InsufficientHorizon {
                horizon: self.horizon(),
                required: 1.0,
            })
        } else {
            Ok(())
        }
    }

    /// Membership of the recorded path in
    /// `E_{K,γ} = {‖Z‖_{𝔏_1} ≤ K, ∫_1^t [...] ds ≤ K(1+t) ∀t ≥ 1}`.
    pub fn event_holds(&self, k: f64, gamma: f64, delta: f64) -> Result<bool> {
        self.check_horizon()?;
        if self.l_norm(1.0, delta) > k {
            return Ok(false);
        }
        Ok(self
            .running_integrals(gamma)
            .iter()
            .all(|&(t, i)| i <= k * (1.0 + t)))
    }

    /// Smallest `K` for which [`NormTrace::event_holds`] is true.
    pub fn event_threshold(&self, gamma: f64, delta: f64) -> Result<f64> {
        self.check_horizon()?;
        let integral_part = self
            .running_integrals(gamma)
            .iter()
            .fold(0.0, |m: f64, &(t, i)| m.max(i / (1.0 + t)));
        Ok(self.l_norm(1.0, delta).max(integral_part))
    }
}

/// `E_{K,γ}` evaluated on a recorded sequence of Wick bundles.
pub fn event_indicator(
    trajectory: &[WickBundle],
    k: f64,
    gamma: f64,
    params: &BesovParams,
    delta: f64,
) -> Result<bool> {
    let mut trace = NormTrace::default();
    for b in trajectory {
        trace.push(NormSample::from_bundle(b, params));
    }
    trace.event_holds(k, gamma, delta)
}
