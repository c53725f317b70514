use serde::Serialize;

use super::{evaluate_all, par_map, ObservableSpec, RecordTable};
use crate::config::InvarianceSettings;
use crate::dynamics::{reconstruct_x, Integrator, ShiftedState, SimConfig};
use crate::error::{Error, Result};
use crate::gibbs::GibbsTarget;
use crate::rng::RngStream;
use crate::spectral::FourierField;
use crate::stats::{holm_adjust, ks_two_sample};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableTest {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub rejected: bool,
    /// KS statistic of the rerun at `dt/2`, when one was made.
    pub refined_statistic: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub ensemble: usize,
    pub horizon: f64,
    pub dt: f64,
    pub level: f64,
    pub tests: Vec<ObservableTest>,
    pub rejections: usize,
    /// Largest number of Holm rejections tolerated, `⌈level · m⌉`.
    pub budget: usize,
    /// Every rejection shrank under `dt/2`.
    pub refinement_shrinks: bool,
    pub passed: bool,
    #[serde(skip)]
    pub table: RecordTable,
}

/// Observables of each member of `initial` after evolving to `horizon`.
fn evolve(
    cfg: &SimConfig,
    ctx_target: &GibbsTarget,
    initial: &[FourierField],
    horizon: f64,
    observables: &[ObservableSpec],
    rng: &RngStream,
) -> Result<Vec<Vec<f64>>> {
    let ctx = &ctx_target.ctx;
    if horizon == 0.0 {
        return initial.iter().map(|f| evaluate_all(observables, f, ctx)).collect();
    }
    let cfg = SimConfig { horizon, ..*cfg };
    let stepper = Integrator::new(&cfg, ctx)?;
    let steps = cfg.steps();
    par_map(initial.len(), rng, |i, mut r| {
        let mut state = ShiftedState::new(initial[i].clone());
        for _ in 0..steps {
            state = stepper.step(&state, &mut r)?;
        }
        evaluate_all(observables, &reconstruct_x(&state), ctx)
    })
}

fn column(values: &[Vec<f64>], j: usize) -> Vec<f64> {
    values.iter().map(|v| v[j]).collect()
}

/// Evolves `initial` (draws from `ν_N`, typically from the pCN chain) to
/// `settings.horizon` and compares each observable's marginal at time 0
/// and at the horizon by a two-sample KS test with Holm's correction.
/// Rejected observables are retested at `dt/2` when `settings.refine`.
pub fn run_invariance_test(
    cfg: &SimConfig,
    target: &GibbsTarget,
    settings: &InvarianceSettings,
    observables: &[ObservableSpec],
    initial: &[FourierField],
    rng: &RngStream,
) -> Result<InvarianceReport> {
    if initial.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "invariance ensemble must be >= 100, got {}",
            initial.len()
        )));
    }
    if target.a1 != cfg.a1 || target.a2 != cfg.a2 || target.ctx.grid != cfg.grid {
        return Err(Error::InvalidParameter("Gibbs target and dynamics disagree".into()));
    }
    let ctx = &target.ctx;
    let start = initial
        .iter()
        .map(|f| evaluate_all(observables, f, ctx))
        .collect::<Result<Vec<_>>>()?;
    let end = evolve(cfg, target, initial, settings.horizon, observables, rng)?;

    let m = observables.len();
    let ks: Vec<_> = (0..m).map(|j| ks_two_sample(&column(&start, j), &column(&end, j))).collect();
    let adjusted = holm_adjust(&ks.iter().map(|r| r.p_value).collect::<Vec<_>>());
    let mut tests: Vec<ObservableTest> = observables
        .iter()
        .zip(&ks)
        .zip(&adjusted)
        .map(|((o, r), &q)| ObservableTest {
            name: o.name.clone(),
            statistic: r.statistic,
            p_value: r.p_value,
            adjusted_p: q,
            rejected: q <= settings.level,
            refined_statistic: None,
        })
        .collect();
    let rejections = tests.iter().filter(|t| t.rejected).count();

    if rejections > 0 && settings.refine && settings.horizon > 0.0 {
        let fine = SimConfig { dt: 0.5 * cfg.dt, ..*cfg };
        let refined = evolve(&fine, target, initial, settings.horizon, observables, rng)?;
        for (j, t) in tests.iter_mut().enumerate().filter(|(_, t)| t.rejected) {
            t.refined_statistic = Some(ks_two_sample(&column(&start, j), &column(&refined, j)).statistic);
        }
    }
    let refinement_shrinks = tests
        .iter()
        .filter(|t| t.rejected)
        .all(|t| t.refined_statistic.is_some_and(|s| s < t.statistic));
    let budget = (settings.level * m as f64).ceil() as usize;

    let mut table = RecordTable::new(observables.iter().map(|o| o.name.clone()).collect());
    for (i, (a, b)) in start.iter().zip(&end).enumerate() {
        table.push(i as u64, 0.0, a.clone());
        table.push(i as u64, settings.horizon, b.clone());
    }
    Ok(InvarianceReport {
        ensemble: initial.len(),
        horizon: settings.horizon,
        dt: cfg.dt,
        level: settings.level,
        passed: rejections == 0 || (rejections <= budget && refinement_shrinks),
        tests,
        rejections,
        budget,
        refinement_shrinks,
        table,
    })
}
