use serde::Serialize;

use super::{evaluate_all, initial_field, par_map, ObservableSpec, RecordTable, TimeAverage};
use crate::config::InitialData;
use crate::dynamics::{reconstruct_x, Integrator, ShiftedState, SimConfig};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::{mean, standard_error};
use crate::wick::WickContext;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub ensemble: usize,
    pub horizon: f64,
    pub steps: usize,
    /// Ensemble mean of each observable at the horizon.
    pub final_means: Vec<TimeAverage>,
    #[serde(skip)]
    pub table: RecordTable,
}

/// Runs `ensemble` independent trajectories of the shifted equation and
/// records the observables of `X` every `record_stride` steps.
pub fn run_simulation(
    cfg: &SimConfig,
    initial: InitialData,
    ensemble: usize,
    observables: &[ObservableSpec],
    rng: &RngStream,
) -> Result<SimulationReport> {
    if ensemble == 0 {
        return Err(Error::InvalidParameter("ensemble must be >= 1".into()));
    }
    let ctx = WickContext::new(cfg.grid);
    let stepper = Integrator::new(cfg, &ctx)?;
    let paths = par_map(ensemble, rng, |_, mut r| {
        let x0 = initial_field(initial, cfg.grid, &mut r);
        let mut rows = Vec::new();
        stepper.run(ShiftedState::new(x0), &mut r, |s| {
            rows.push((s.t, evaluate_all(observables, &reconstruct_x(s), &ctx)?));
            Ok(())
        })?;
        Ok(rows)
    })?;
    let mut table = RecordTable::new(observables.iter().map(|o| o.name.clone()).collect());
    for (i, rows) in paths.iter().enumerate() {
        for (t, v) in rows {
            table.push(i as u64, *t, v.clone());
        }
    }
    let final_means = observables
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let xs: Vec<f64> = paths.iter().map(|p| p.last().expect("t = 0 recorded").1[j]).collect();
            TimeAverage {
                label: o.name.clone(),
                mean: mean(&xs),
                se: if xs.len() > 1 { standard_error(&xs) } else { f64::NAN },
                samples: xs.len(),
            }
        })
        .collect();
    Ok(SimulationReport {
        ensemble,
        horizon: cfg.horizon,
        steps: cfg.steps(),
        final_means,
        table,
    })
}
