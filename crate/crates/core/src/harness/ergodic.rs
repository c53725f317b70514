use serde::Serialize;

use super::{discrepancy, evaluate_all, par_map, ObservableSpec, RecordTable};
use crate::config::ErgodicSettings;
use crate::dynamics::{reconstruct_x, Integrator, ShiftedState, SimConfig};
use crate::error::{Error, Result};
use crate::gibbs::GibbsTarget;
use crate::rng::RngStream;
use crate::spectral::FourierField;
use crate::stats::{batch_means_se, mean};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeAverage {
    pub label: String,
    pub mean: f64,
    /// Batch-means standard error.
    pub se: f64,
    pub samples: usize,
}

impl TimeAverage {
    fn of(label: &str, xs: &[f64]) -> Self {
        Self {
            label: label.to_string(),
            mean: mean(xs),
            se: batch_means_se(xs),
            samples: xs.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicObservable {
    pub name: String,
    /// One time average per initial condition.
    pub averages: Vec<TimeAverage>,
    pub gibbs: TimeAverage,
    /// Normalized differences between every pair of time averages.
    pub pairwise: Vec<f64>,
    /// Normalized differences of each time average from the Gibbs mean.
    pub versus_gibbs: Vec<f64>,
    pub max_abs_discrepancy: f64,
}

impl ErgodicObservable {
    pub fn agrees(&self, sigmas: f64) -> bool {
        self.max_abs_discrepancy <= sigmas
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicReport {
    pub horizon: f64,
    pub discard: f64,
    pub observables: Vec<ErgodicObservable>,
    #[serde(skip)]
    pub table: RecordTable,
}

impl ErgodicReport {
    pub fn agrees(&self, sigmas: f64) -> bool {
        self.observables.iter().all(|o| o.agrees(sigmas))
    }
}

/// Time averages over `(discard, horizon]` along one trajectory per entry
/// of `inits` (independent noise), compared with each other and with the
/// mean over `gibbs_samples`.
pub fn run_ergodic_average(
    cfg: &SimConfig,
    target: &GibbsTarget,
    inits: &[(String, FourierField)],
    settings: &ErgodicSettings,
    observables: &[ObservableSpec],
    gibbs_samples: &[FourierField],
    rng: &RngStream,
) -> Result<ErgodicReport> {
    if inits.is_empty() || gibbs_samples.len() < 4 {
        return Err(Error::InvalidParameter("need initial data and at least 4 Gibbs samples".into()));
    }
    if !(settings.horizon > settings.discard && settings.discard >= 0.0) {
        return Err(Error::InvalidParameter("need 0 <= discard < horizon".into()));
    }
    let cfg = SimConfig {
        horizon: settings.horizon,
        ..*cfg
    };
    let ctx = &target.ctx;
    let stepper = Integrator::new(&cfg, ctx)?;
    let paths = par_map(inits.len(), rng, |i, mut r| {
        let mut rows = Vec::new();
        stepper.run(ShiftedState::new(inits[i].1.clone()), &mut r, |s| {
            rows.push((s.t, evaluate_all(observables, &reconstruct_x(s), ctx)?));
            Ok(())
        })?;
        Ok(rows)
    })?;
    let gibbs_values = gibbs_samples
        .iter()
        .map(|f| evaluate_all(observables, f, ctx))
        .collect::<Result<Vec<_>>>()?;

    let mut table = RecordTable::new(observables.iter().map(|o| o.name.clone()).collect());
    for (i, rows) in paths.iter().enumerate() {
        for (t, v) in rows {
            table.push(i as u64, *t, v.clone());
        }
    }

    let mut out = Vec::with_capacity(observables.len());
    for (j, o) in observables.iter().enumerate() {
        let averages: Vec<TimeAverage> = paths
            .iter()
            .zip(inits)
            .map(|(rows, (label, _))| {
                let xs: Vec<f64> = rows
                    .iter()
                    .filter(|(t, _)| *t > settings.discard)
                    .map(|(_, v)| v[j])
                    .collect();
                TimeAverage::of(label, &xs)
            })
            .collect();
        let gibbs = TimeAverage::of("gibbs", &gibbs_values.iter().map(|v| v[j]).collect::<Vec<_>>());
        let mut pairwise = Vec::new();
        for a in 0..averages.len() {
            for b in a + 1..averages.len() {
                let (x, y) = (&averages[a], &averages[b]);
                pairwise.push(discrepancy(x.mean, x.se, y.mean, y.se));
            }
        }
        let versus_gibbs: Vec<f64> = averages
            .iter()
            .map(|x| discrepancy(x.mean, x.se, gibbs.mean, gibbs.se))
            .collect();
        let max_abs_discrepancy = pairwise
            .iter()
            .chain(&versus_gibbs)
            .map(|d| if d.is_nan() { f64::INFINITY } else { d.abs() })
            .fold(0.0, f64::max);
        out.push(ErgodicObservable {
            name: o.name.clone(),
            averages,
            gibbs,
            pairwise,
            versus_gibbs,
            max_abs_discrepancy,
        });
    }
    Ok(ErgodicReport {
        horizon: settings.horizon,
        discard: settings.discard,
        observables: out,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use crate::stochastic::{mode_variance, sample_gff};
    use crate::wick::WickContext;

    #[test]
    fn gaussian_mode_average_matches_variance() {
        let grid = GridSpec::dealiased(1);
        let cfg = SimConfig {
            a1: 0.0,
            dt: 1e-2,
            record_stride: 10,
            ..SimConfig::new(grid)
        };
        let target = GibbsTarget::new(0.0, 0.0, WickContext::new(grid)).unwrap();
        let settings = ErgodicSettings {
            horizon: 400.0,
            discard: 1.0,
            gibbs_samples: 0,
        };
        let obs = vec![ObservableSpec::parse("mode:1:0").unwrap(), ObservableSpec::parse("wick2").unwrap()];
        let mut r = RngStream::new(91, 1);
        let gibbs: Vec<FourierField> = (0..2000).map(|_| sample_gff(grid, &mut r)).collect();
        let inits = vec![
            ("zero".to_string(), FourierField::zeros(grid)),
            ("gff".to_string(), sample_gff(grid, &mut r)),
        ];
        let rep = run_ergodic_average(&cfg, &target, &inits, &settings, &obs, &gibbs, &RngStream::new(91, 0)).unwrap();
        assert!(rep.agrees(4.0), "{:?}", rep.observables);
        // |c_k| is Rayleigh with E|c_k|² = 1/(2λ_k): mean √(π/4 · 1/(2λ_k))
        let expected = (std::f64::consts::PI / 4.0 * mode_variance([1, 0])).sqrt();
        let a = &rep.observables[0].averages[0];
        assert!((a.mean - expected).abs() < 4.0 * a.se, "{} vs {expected} ± {}", a.mean, a.se);
    }

    #[test]
    fn constant_observable_agrees_exactly() {
        let grid = GridSpec::dealiased(1);
        let cfg = SimConfig {
            dt: 1e-2,
            record_stride: 10,
            ..SimConfig::new(grid)
        };
        let target = GibbsTarget::new(1.0, 0.0, WickContext::new(grid)).unwrap();
        let settings = ErgodicSettings {
            horizon: 3.0,
            discard: 1.0,
            gibbs_samples: 0,
        };
        // frozen noise from zero keeps X ≡ 0
        let obs = vec![ObservableSpec::parse("besov:0").unwrap()];
        let gibbs = vec![FourierField::zeros(grid); 8];
        let inits = vec![("zero".to_string(), FourierField::zeros(grid))];
        let mut frozen = cfg;
        frozen.frozen_noise = true;
        let rep = run_ergodic_average(&frozen, &target, &inits, &settings, &obs, &gibbs, &RngStream::new(92, 0)).unwrap();
        assert_eq!(rep.observables[0].max_abs_discrepancy, 0.0);
    }
}
