//! Experiment campaigns (coupling contraction, invariance, ergodic averages,
//! inequality checks) and their persisted records.

mod commands;
mod coupling;
mod ergodic;
mod invariance;
mod observables;
mod properties;
mod records;
mod simulate;

use rayon::prelude::*;

pub use commands::{run_command, Command, CommandOutcome};
pub use coupling::{run_coupling_experiment, CouplingReport, CouplingTrajectory, LambdaSummary};
pub use ergodic::{run_ergodic_average, ErgodicObservable, ErgodicReport, TimeAverage};
pub use invariance::{run_invariance_test, InvarianceReport, ObservableTest};
pub use observables::{evaluate_all, CylinderShape, ObservableKind, ObservableSpec};
pub use properties::{run_property_suite, wick_identity_checks, PropertyEntry, PropertyReport};
pub use records::{
    prepare_out_dir, read_samples, write_samples, write_summary, ExperimentRecord, RecordTable, RunMeta,
};
pub use simulate::{run_simulation, SimulationReport};

use crate::config::InitialData;
use crate::error::Result;
use crate::rng::RngStream;
use crate::spectral::{FourierField, GridSpec, LinearOperator};
use crate::stochastic::sample_gff;

/// Draws or builds one initial field.
pub fn initial_field(kind: InitialData, grid: GridSpec, rng: &mut RngStream) -> FourierField {
    match kind {
        InitialData::Zero => FourierField::zeros(grid),
        InitialData::Gff => sample_gff(grid, rng),
        InitialData::Smooth => LinearOperator::Semigroup { t: 1.0 }.apply(&sample_gff(grid, rng)),
        InitialData::Constant(v) => FourierField::constant(grid, v),
    }
}

/// Runs `f(i, stream_i)` for `i < n` on the worker pool, where `stream_i` is
/// `rng.derive(i)`. Results come back in index order.
pub(crate) fn par_map<T: Send>(
    n: usize,
    rng: &RngStream,
    f: impl Fn(usize, RngStream) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(|i| f(i, rng.derive(i as u64))).collect()
}

/// Median, or NaN for an empty sample.
pub(crate) fn median_or_nan(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        crate::stats::median(xs)
    }
}

/// `(a − b) / √(sa² + sb²)`, with exact agreement mapped to 0.
pub(crate) fn discrepancy(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let d = a - b;
    if d == 0.0 {
        return 0.0;
    }
    d / (sa * sa + sb * sb).sqrt()
}
