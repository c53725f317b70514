//! Flat `section.key = value` run configuration.
//!
//! Every key has a default; a file and then command-line overrides replace
//! values, unknown keys are rejected, and the resolved table is echoed in
//! canonical sorted form. The echo parses back to the same table, and its
//! SHA-256 is the config hash stamped on every record.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::besov::BesovParams;
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::gibbs::SamplerSettings;
use crate::harness::ObservableSpec;
use crate::spectral::GridSpec;

const DEFAULTS: &[(&str, &str)] = &[
    ("run.seed", "0"),
    ("grid.cutoff_n", "8"),
    ("grid.side_points", "auto"),
    ("sim.a1", "1"),
    ("sim.a2", "0"),
    ("sim.dt", "0.001"),
    ("sim.horizon", "5"),
    ("sim.record_stride", "100"),
    ("sim.frozen_noise", "false"),
    ("besov.alpha", "-0.05"),
    ("besov.delta", "0.02"),
    ("besov.beta", "0.1"),
    ("besov.gamma", "1"),
    ("coupling.lambda_sweep", "20"),
    ("coupling.r", "1000"),
    ("coupling.k", "median"),
    ("coupling.p0", "42"),
    ("coupling.horizon", "20"),
    ("coupling.ensemble", "50"),
    ("coupling.initial", "gff"),
    ("gibbs.burn_in", "10000"),
    ("gibbs.warmup", "5000"),
    ("gibbs.thin", "10"),
    ("gibbs.step", "0.5"),
    ("gibbs.target_acceptance", "0.25"),
    ("gibbs.samples", "1000"),
    ("gibbs.samples_file", ""),
    ("invariance.ensemble", "500"),
    ("invariance.horizon", "5"),
    ("invariance.level", "0.01"),
    ("invariance.refine", "true"),
    ("ergodic.horizon", "200"),
    ("ergodic.discard", "1"),
    ("ergodic.gibbs_samples", "10000"),
    ("propcheck.trials", "1000"),
    ("simulate.ensemble", "4"),
    ("simulate.initial", "gff"),
    ("harness.observables", "wick2,l2,mode:0:0,mode:1:0,mode:1:1"),
];

/// Initial data for simulated trajectories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialData {
    Zero,
    /// A draw from `μ`.
    Gff,
    /// `e^{A}` applied to a draw from `μ`.
    Smooth,
    Constant(f64),
}

impl InitialData {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "gff" => Ok(Self::Gff),
            "smooth" => Ok(Self::Smooth),
            _ => match s.strip_prefix("constant:") {
                Some(v) => Ok(Self::Constant(parse_f64("initial constant", v)?)),
                None => Err(Error::Config(format!("unknown initial data '{s}'"))),
            },
        }
    }
}

/// Choice of `K` in the event `E_{K,γ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KRule {
    /// Median of the per-trajectory thresholds, so at least half qualify.
    Median,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSettings {
    pub lambda_sweep: Vec<f64>,
    pub r: f64,
    pub k: KRule,
    pub p0: usize,
    pub horizon: f64,
    pub ensemble: usize,
    pub initial: InitialData,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceSettings {
    pub ensemble: usize,
    pub horizon: f64,
    pub level: f64,
    pub refine: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgodicSettings {
    pub horizon: f64,
    pub discard: f64,
    pub gibbs_samples: usize,
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub sim: SimConfig,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub coupling: CouplingSettings,
    pub sampler: SamplerSettings,
    pub gibbs_samples: usize,
    pub samples_file: Option<String>,
    pub invariance: InvarianceSettings,
    pub ergodic: ErgodicSettings,
    pub propcheck_trials: usize,
    pub simulate_ensemble: usize,
    pub simulate_initial: InitialData,
    pub observables: Vec<ObservableSpec>,
    table: BTreeMap<String, String>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got '{v}'")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

/// Splits `key = value`; `None` for blank and `#` comment lines.
fn split_line(line: &str) -> Result<Option<(String, String)>> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key = value, got '{line}'")))?;
    Ok(Some((k.trim().to_string(), v.trim().to_string())))
}

/// Key/value table being assembled from defaults, files and overrides.
#[derive(Clone, Debug)]
pub struct ConfigBuilder {
    table: BTreeMap<String, String>,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        Self {
            table: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl ConfigBuilder {
    /// Full key for `key`; a bare name such as `dt` resolves when exactly
    /// one section defines it.
    fn resolve(&self, key: &str) -> Result<String> {
        if self.table.contains_key(key) || key.contains('.') {
            return Ok(key.to_string());
        }
        let suffix = format!(".{key}");
        let hits: Vec<&String> = self.table.keys().filter(|k| k.ends_with(&suffix)).collect();
        match hits.as_slice() {
            [one] => Ok((*one).clone()),
            [] => Err(Error::Config(format!("unknown key '{key}'"))),
            _ => Err(Error::Config(format!("ambiguous key '{key}'"))),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        let key = self.resolve(key)?;
        match self.table.get_mut(&key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(self)
            }
            None => Err(Error::Config(format!("unknown key '{key}'"))),
        }
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<&mut Self> {
        match split_line(assignment)? {
            Some((k, v)) => self.set(&k, &v),
            None => Err(Error::Config(format!("empty override '{assignment}'"))),
        }
    }

    pub fn apply_text(&mut self, text: &str) -> Result<&mut Self> {
        for (n, line) in text.lines().enumerate() {
            if let Some((k, v)) = split_line(line).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))? {
                self.set(&k, &v)
                    .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
            }
        }
        Ok(self)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<&mut Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn build(&self) -> Result<RunConfig> {
        RunConfig::from_table(self.table.clone())
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        ConfigBuilder::default().apply_text(text)?.build()
    }

    fn from_table(table: BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| table.get(k).map(String::as_str).expect("default present");
        let f = |k: &str| parse_f64(k, get(k));
        let u = |k: &str| parse_usize(k, get(k));
        let b = |k: &str| parse_bool(k, get(k));

        let cutoff = u("grid.cutoff_n")?;
        let grid = match get("grid.side_points") {
            "auto" => GridSpec::dealiased(cutoff),
            s => GridSpec::new(cutoff, parse_usize("grid.side_points", s)?)?,
        };
        if !grid.is_dealiased() {
            return Err(Error::Config(format!(
                "grid.side_points = {} does not resolve cubic products (need >= {})",
                grid.side(),
                2 * (2 * cutoff + 1)
            )));
        }
        let seed = get("run.seed")
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("run.seed: expected a 64-bit unsigned integer, got '{}'", get("run.seed"))))?;
        let sim = SimConfig {
            a1: f("sim.a1")?,
            a2: f("sim.a2")?,
            grid,
            dt: f("sim.dt")?,
            horizon: f("sim.horizon")?,
            record_stride: u("sim.record_stride")?,
            besov: BesovParams::holder(f("besov.alpha")?),
            frozen_noise: b("sim.frozen_noise")?,
        };
        sim.validate()?;
        let alpha = sim.besov.alpha;
        let delta = f("besov.delta")?;
        if !(alpha < 0.0 && delta > 0.0 && delta < -alpha) {
            return Err(Error::Config(format!("need alpha < 0 and 0 < delta < -alpha, got ({alpha}, {delta})")));
        }
        let gamma = f("besov.gamma")?;
        if !(gamma > 0.0) {
            return Err(Error::Config(format!("besov.gamma must be positive, got {gamma}")));
        }

        let lambda_sweep = get("coupling.lambda_sweep")
            .split(',')
            .map(|s| parse_f64("coupling.lambda_sweep", s.trim()))
            .collect::<Result<Vec<_>>>()?;
        if lambda_sweep.iter().any(|&l| !(l > 1.0 && l.is_finite())) {
            return Err(Error::Config("coupling.lambda_sweep values must exceed 1".into()));
        }
        let k = match get("coupling.k") {
            "median" => KRule::Median,
            s => KRule::Fixed(parse_f64("coupling.k", s)?),
        };
        let p0 = u("coupling.p0")?;
        if p0 < 2 || p0 % 2 != 0 {
            return Err(Error::Config(format!("coupling.p0 must be even and >= 2, got {p0}")));
        }
        let coupling = CouplingSettings {
            lambda_sweep,
            r: f("coupling.r")?,
            k,
            p0,
            horizon: f("coupling.horizon")?,
            ensemble: u("coupling.ensemble")?,
            initial: InitialData::parse(get("coupling.initial"))?,
        };
        if !(coupling.r > 0.0) || !(coupling.horizon > 0.0) {
            return Err(Error::Config("coupling.r and coupling.horizon must be positive".into()));
        }

        let sampler = SamplerSettings {
            burn_in: u("gibbs.burn_in")?,
            warmup: u("gibbs.warmup")?,
            thin: u("gibbs.thin")?,
            initial_step: f("gibbs.step")?,
            target_acceptance: f("gibbs.target_acceptance")?,
        };
        if sampler.thin == 0 || !(sampler.initial_step > 0.0 && sampler.initial_step < 1.0) {
            return Err(Error::Config("gibbs.thin must be >= 1 and gibbs.step in (0, 1)".into()));
        }
        let samples_file = Some(get("gibbs.samples_file").to_string()).filter(|s| !s.is_empty());

        let invariance = InvarianceSettings {
            ensemble: u("invariance.ensemble")?,
            horizon: f("invariance.horizon")?,
            level: f("invariance.level")?,
            refine: b("invariance.refine")?,
        };
        if !(invariance.horizon >= 0.0) || !(invariance.level > 0.0 && invariance.level < 1.0) {
            return Err(Error::Config("invariance.horizon must be >= 0 and invariance.level in (0, 1)".into()));
        }
        let ergodic = ErgodicSettings {
            horizon: f("ergodic.horizon")?,
            discard: f("ergodic.discard")?,
            gibbs_samples: u("ergodic.gibbs_samples")?,
        };
        if !(ergodic.horizon > ergodic.discard && ergodic.discard >= 0.0) {
            return Err(Error::Config("need 0 <= ergodic.discard < ergodic.horizon".into()));
        }
        let observables = get("harness.observables")
            .split(',')
            .map(|s| ObservableSpec::parse(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            seed,
            sim,
            delta,
            beta: f("besov.beta")?,
            gamma,
            coupling,
            sampler,
            gibbs_samples: u("gibbs.samples")?,
            samples_file,
            invariance,
            ergodic,
            propcheck_trials: u("propcheck.trials")?,
            simulate_ensemble: u("simulate.ensemble")?,
            simulate_initial: InitialData::parse(get("simulate.initial"))?,
            observables,
            table,
        })
    }

    /// Canonical `key = value` listing of every resolved key.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.table {
            writeln!(out, "{k} = {v}").expect("write to string");
        }
        out
    }

    /// Hex SHA-256 of [`RunConfig::echo`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.table.get(key).map(String::as_str)
    }
}

/// Text of the default configuration file.
pub fn default_config_text() -> String {
    ConfigBuilder::default()
        .build()
        .expect("defaults are valid")
        .echo()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = ConfigBuilder::default().build().unwrap();
        assert_eq!(c.sim.grid, GridSpec::dealiased(8));
        assert_eq!(c.sim.grid.side(), 36);
        assert_eq!(c.coupling.lambda_sweep, vec![20.0]);
        assert_eq!(c.coupling.k, KRule::Median);
        assert_eq!(c.observables.len(), 5);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn echo_round_trips() {
        let mut b = ConfigBuilder::default();
        b.apply_text("# comment\nsim.dt = 0.0005\n\ncoupling.lambda_sweep = 5, 10\n").unwrap();
        b.apply_override("run.seed=99").unwrap();
        let c = b.build().unwrap();
        assert_eq!(c.sim.dt, 0.0005);
        assert_eq!(c.seed, 99);
        let again = RunConfig::from_text(&c.echo()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
        assert_ne!(ConfigBuilder::default().build().unwrap().hash(), c.hash());
    }

    #[test]
    fn rejects_bad_input() {
        let mut b = ConfigBuilder::default();
        assert!(b.set("sim.nonsense", "1").is_err());
        assert!(b.apply_override("sim.dt").is_err());
        assert!(RunConfig::from_text("sim.dt = -0.1").is_err());
        assert!(RunConfig::from_text("sim.dt = abc").is_err());
        assert!(RunConfig::from_text("grid.side_points = 20").is_err());
        assert!(RunConfig::from_text("coupling.lambda_sweep = 0.5").is_err());
        assert!(RunConfig::from_text("coupling.p0 = 41").is_err());
        assert!(RunConfig::from_text("besov.delta = 0.2").is_err());
        assert!(RunConfig::from_text("harness.observables = wat").is_err());
        assert!(RunConfig::from_text("not a line").is_err());
    }

    #[test]
    fn bare_keys_resolve_when_unique() {
        let mut b = ConfigBuilder::default();
        b.apply_override("dt=0.002").unwrap();
        assert_eq!(b.build().unwrap().sim.dt, 0.002);
        assert!(b.apply_override("horizon=3").is_err());
        b.apply_override("dt=-0.1").unwrap();
        assert!(b.build().is_err());
    }

    #[test]
    fn initial_data_forms() {
        assert_eq!(InitialData::parse("constant:1.5").unwrap(), InitialData::Constant(1.5));
        assert!(InitialData::parse("constant:x").is_err());
        assert_eq!(InitialData::parse("smooth").unwrap(), InitialData::Smooth);
    }
}
