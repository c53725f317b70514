use serde::Serialize;

use super::{initial_field, median_or_nan, par_map, RecordTable};
use crate::besov::{NormSample, NormTrace};
use crate::config::{CouplingSettings, KRule};
use crate::dynamics::{CoupledIntegrator, CouplingState, SimConfig};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::ols;
use crate::wick::WickContext;

const COLUMNS: [&str; 8] = ["lambda", "u_l2", "u_lp", "drift_cost", "z_norm", "z2_norm", "z3_norm", "in_event"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingTrajectory {
    pub trajectory_id: u64,
    pub lambda: f64,
    /// Smallest `K` with the path in `E_{K,γ}`.
    pub threshold: f64,
    pub in_event: bool,
    /// OLS slope of `log‖u‖²_{L²}` on `[1, T]`.
    pub slope: Option<f64>,
    /// Negative slope, or `u ≡ 0`.
    pub decayed: bool,
    pub u_at_1: f64,
    pub u_at_end: f64,
    pub tau_r: Option<f64>,
    pub drift_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub k: f64,
    pub ensemble: usize,
    pub conditioned: usize,
    pub conditioned_fraction: f64,
    /// Fraction of conditioned trajectories that decayed.
    pub decay_fraction: f64,
    pub decay_fraction_all: f64,
    pub median_u_at_1: f64,
    pub median_u_at_end: f64,
    pub median_slope: f64,
    pub median_slope_all: f64,
    /// Fraction of conditioned trajectories whose drift cost stayed below `R`.
    pub tau_r_never_hit_fraction: f64,
    /// Fitted `C₁ = −slope` over the conditioned subset.
    pub rates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingReport {
    pub horizon: f64,
    pub p0: usize,
    pub gamma: f64,
    pub summaries: Vec<LambdaSummary>,
    pub trajectories: Vec<CouplingTrajectory>,
    #[serde(skip)]
    pub table: RecordTable,
}

struct Run {
    /// `(t, ‖u‖_{L²}, ‖u‖_{L^{p₀}}, drift cost)`.
    rows: Vec<(f64, f64, f64, f64)>,
    trace: NormTrace,
    tau_r: Option<f64>,
    drift_cost: f64,
    u_zero: bool,
}

fn run_pair(
    cfg: &SimConfig,
    ctx: &WickContext,
    settings: &CouplingSettings,
    lambda: f64,
    mut rng: RngStream,
) -> Result<Run> {
    let x0 = initial_field(settings.initial, cfg.grid, &mut rng);
    let x1 = initial_field(settings.initial, cfg.grid, &mut rng);
    let u_zero = x0 == x1;
    let stepper = CoupledIntegrator::new(cfg, ctx, lambda)?;
    let state = CouplingState::new(x0, x1, lambda, settings.r)?;
    let p0 = settings.p0 as f64;
    let mut rows = Vec::new();
    let mut trace = NormTrace::default();
    let last = stepper.run(state, &mut rng, |s| {
        let u_phys = s.u.to_physical();
        rows.push((s.t(), s.u.l2_norm(), u_phys.lp_norm(p0), s.drift_cost));
        trace.push(NormSample::from_bundle(&s.shifted.bundle(ctx)?, &cfg.besov));
        Ok(())
    })?;
    Ok(Run {
        rows,
        trace,
        tau_r: last.tau_r,
        drift_cost: last.drift_cost,
        u_zero,
    })
}

/// Slope of `log‖u‖²` against `t` on `t >= 1`, stopping at the first
/// vanishing or non-finite value.
fn decay_slope(rows: &[(f64, f64, f64, f64)]) -> Option<f64> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for &(t, u, _, _) in rows.iter().filter(|r| r.0 >= 1.0 - 1e-9) {
        let u2 = u * u;
        if !(u2 > 0.0 && u2.is_finite()) {
            break;
        }
        x.push(t);
        y.push(u2.ln());
    }
    ols(&x, &y).map(|f| f.slope)
}

fn value_at(rows: &[(f64, f64, f64, f64)], t: f64) -> f64 {
    rows.iter()
        .find(|r| r.0 >= t - 1e-9)
        .or(rows.last())
        .map(|r| r.1)
        .unwrap_or(f64::NAN)
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        f64::NAN
    } else {
        count as f64 / total as f64
    }
}

/// Runs `ensemble` coupled pairs for each `λ`, with `x₀, x₁` drawn per
/// `settings.initial`. Trajectory `i` uses the same initial data and noise
/// for every `λ`. Decay is fitted on the `E_{K,γ}`-conditioned subset.
pub fn run_coupling_experiment(
    cfg: &SimConfig,
    settings: &CouplingSettings,
    gamma: f64,
    delta: f64,
    rng: &RngStream,
) -> Result<CouplingReport> {
    if settings.lambda_sweep.iter().any(|&l| !(l > 1.0)) {
        return Err(Error::InvalidParameter("lambda values must exceed 1".into()));
    }
    if settings.ensemble < 10 {
        return Err(Error::InvalidParameter(format!(
            "coupling ensemble must be >= 10, got {}",
            settings.ensemble
        )));
    }
    let cfg = SimConfig {
        horizon: settings.horizon,
        ..*cfg
    };
    cfg.validate()?;
    let ctx = WickContext::new(cfg.grid);
    let n = settings.ensemble;

    let columns = COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut table = RecordTable::new(columns);
    let mut summaries = Vec::new();
    let mut trajectories = Vec::new();
    for (li, &lambda) in settings.lambda_sweep.iter().enumerate() {
        let runs = par_map(n, rng, |_, r| run_pair(&cfg, &ctx, settings, lambda, r))?;
        let thresholds = runs
            .iter()
            .map(|r| r.trace.event_threshold(gamma, delta))
            .collect::<Result<Vec<_>>>()?;
        let k = match settings.k {
            KRule::Median => crate::stats::median(&thresholds),
            KRule::Fixed(k) => k,
        };

        let mut trajs = Vec::with_capacity(n);
        for (i, (run, &threshold)) in runs.iter().zip(&thresholds).enumerate() {
            let id = (li * n + i) as u64;
            let in_event = threshold <= k;
            for (row, s) in run.rows.iter().zip(&run.trace.samples) {
                table.push(
                    id,
                    row.0,
                    vec![lambda, row.1, row.2, row.3, s.z, s.z2, s.z3, f64::from(u8::from(in_event))],
                );
            }
            let slope = if run.u_zero { None } else { decay_slope(&run.rows) };
            trajs.push(CouplingTrajectory {
                trajectory_id: id,
                lambda,
                threshold,
                in_event,
                slope,
                decayed: run.u_zero || slope.is_some_and(|s| s < 0.0),
                u_at_1: value_at(&run.rows, 1.0),
                u_at_end: run.rows.last().map(|r| r.1).unwrap_or(f64::NAN),
                tau_r: run.tau_r,
                drift_cost: run.drift_cost,
            });
        }

        let cond: Vec<&CouplingTrajectory> = trajs.iter().filter(|t| t.in_event).collect();
        let slopes = |ts: &[&CouplingTrajectory]| ts.iter().filter_map(|t| t.slope).collect::<Vec<_>>();
        let all: Vec<&CouplingTrajectory> = trajs.iter().collect();
        let cond_slopes = slopes(&cond);
        summaries.push(LambdaSummary {
            lambda,
            k,
            ensemble: n,
            conditioned: cond.len(),
            conditioned_fraction: fraction(cond.len(), n),
            decay_fraction: fraction(cond.iter().filter(|t| t.decayed).count(), cond.len()),
            decay_fraction_all: fraction(trajs.iter().filter(|t| t.decayed).count(), n),
            median_u_at_1: median_or_nan(&cond.iter().map(|t| t.u_at_1).collect::<Vec<_>>()),
            median_u_at_end: median_or_nan(&cond.iter().map(|t| t.u_at_end).collect::<Vec<_>>()),
            median_slope: median_or_nan(&cond_slopes),
            median_slope_all: median_or_nan(&slopes(&all)),
            tau_r_never_hit_fraction: fraction(cond.iter().filter(|t| t.tau_r.is_none()).count(), cond.len()),
            rates: cond_slopes.iter().map(|s| -s).collect(),
        });
        trajectories.extend(trajs);
    }
    Ok(CouplingReport {
        horizon: cfg.horizon,
        p0: settings.p0,
        gamma,
        summaries,
        trajectories,
        table,
    })
}
