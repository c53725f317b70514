use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    evaluate_all, initial_field, prepare_out_dir, read_samples, run_coupling_experiment, run_ergodic_average,
    run_invariance_test, run_property_suite, run_simulation, write_samples, write_summary, RecordTable, RunMeta,
    TimeAverage,
};
use crate::config::{InitialData, RunConfig};
use crate::error::{Error, Result};
use crate::gibbs::{sample_gibbs, ChainSummary, GibbsTarget};
use crate::rng::RngStream;
use crate::spectral::FourierField;
use crate::stats::{batch_means_se, mean};
use crate::wick::WickContext;

/// Name of the config echo written into every output directory.
pub const CONFIG_ECHO: &str = "config.cfg";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Couple,
    Gibbs,
    Invariance,
    Ergodic,
    Propcheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Self::Simulate,
        Self::Couple,
        Self::Gibbs,
        Self::Invariance,
        Self::Ergodic,
        Self::Propcheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Couple => "couple",
            Self::Gibbs => "gibbs",
            Self::Invariance => "invariance",
            Self::Ergodic => "ergodic",
            Self::Propcheck => "propcheck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

/// Files written by one command and its overall verdict, if it has one.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutcome {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub passed: Option<bool>,
}

#[derive(Serialize)]
struct ChainResults {
    chain: ChainSummary,
    means: Vec<TimeAverage>,
}

#[derive(Serialize)]
struct WithChain<'a, T: Serialize> {
    chain: Option<ChainSummary>,
    #[serde(flatten)]
    report: &'a T,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
}

fn gibbs_target(cfg: &RunConfig) -> Result<GibbsTarget> {
    GibbsTarget::new(cfg.sim.a1, cfg.sim.a2, WickContext::new(cfg.sim.grid))
}

/// `n` samples of `ν_N`, from the configured samples file or a fresh chain.
fn gibbs_samples(
    cfg: &RunConfig,
    target: &GibbsTarget,
    n: usize,
    rng: &mut RngStream,
) -> Result<(Vec<FourierField>, Option<ChainSummary>)> {
    match &cfg.samples_file {
        Some(path) => {
            let mut samples = read_samples(Path::new(path))?;
            if samples.len() < n {
                return Err(Error::Config(format!("{path} holds {} samples, need {n}", samples.len())));
            }
            if samples[0].grid() != cfg.sim.grid {
                return Err(Error::GridMismatch);
            }
            samples.truncate(n);
            Ok((samples, None))
        }
        None => {
            let (samples, summary) = sample_gibbs(target, &cfg.sampler, n, rng)?;
            Ok((samples, Some(summary)))
        }
    }
}

struct Files<'a> {
    records: &'a Path,
    summary: &'a Path,
    meta: &'a RunMeta,
    echo: &'a str,
}

impl Files<'_> {
    fn write<T: Serialize>(&self, table: &RecordTable, results: &T) -> Result<()> {
        table.write_csv(self.records, self.meta)?;
        write_summary(self.summary, self.meta, self.echo, results)
    }
}

/// Echoes the resolved config into `out`, runs `cmd` with the master stream
/// `(seed, command)`, then writes `<cmd>.csv` and `<cmd>_summary.json`.
/// Nothing is written outside `out`.
pub fn run_command(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    prepare_out_dir(out)?;
    let echo = cfg.echo();
    fs::write(out.join(CONFIG_ECHO), &echo)?;

    let meta = RunMeta::new(cmd.name(), &cfg.hash(), cfg.seed);
    let master = RngStream::new(cfg.seed, cmd.stream());
    let records = out.join(format!("{}.csv", cmd.name()));
    let summary = out.join(format!("{}_summary.json", cmd.name()));
    let files = Files {
        records: &records,
        summary: &summary,
        meta: &meta,
        echo: &echo,
    };

    let passed = match cmd {
        Command::Simulate => {
            let sim = cfg.sim;
            let r = run_simulation(&sim, cfg.simulate_initial, cfg.simulate_ensemble, &cfg.observables, &master)?;
            files.write(&r.table, &r)?;
            None
        }
        Command::Couple => {
            let r = run_coupling_experiment(&cfg.sim, &cfg.coupling, cfg.gamma, cfg.delta, &master)?;
            files.write(&r.table, &r)?;
            None
        }
        Command::Gibbs => {
            let target = gibbs_target(cfg)?;
            let mut rng = master.derive(0);
            let (samples, chain) = sample_gibbs(&target, &cfg.sampler, cfg.gibbs_samples, &mut rng)?;
            write_samples(&out.join("gibbs_samples.csv"), &samples)?;
            let mut table = RecordTable::new(cfg.observables.iter().map(|o| o.name.clone()).collect());
            for (i, s) in samples.iter().enumerate() {
                table.push(0, i as f64, evaluate_all(&cfg.observables, s, &target.ctx)?);
            }
            let means = (0..cfg.observables.len())
                .map(|j| {
                    let xs: Vec<f64> = table.rows.iter().map(|r| r.values[j]).collect();
                    TimeAverage {
                        label: cfg.observables[j].name.clone(),
                        mean: if xs.is_empty() { f64::NAN } else { mean(&xs) },
                        se: batch_means_se(&xs),
                        samples: xs.len(),
                    }
                })
                .collect();
            files.write(&table, &ChainResults { chain, means })?;
            None
        }
        Command::Invariance => {
            let target = gibbs_target(cfg)?;
            let mut rng = master.derive(0);
            let (initial, chain) = gibbs_samples(cfg, &target, cfg.invariance.ensemble, &mut rng)?;
            let r = run_invariance_test(&cfg.sim, &target, &cfg.invariance, &cfg.observables, &initial, &master.derive(1))?;
            files.write(
                &r.table,
                &WithChain {
                    chain,
                    report: &r,
                    passed: None,
                },
            )?;
            Some(r.passed)
        }
        Command::Ergodic => {
            let target = gibbs_target(cfg)?;
            let mut rng = master.derive(0);
            let (samples, chain) = gibbs_samples(cfg, &target, cfg.ergodic.gibbs_samples, &mut rng)?;
            let mut init_rng = master.derive(2);
            let inits = vec![
                ("zero".to_string(), FourierField::zeros(cfg.sim.grid)),
                ("gff".to_string(), initial_field(InitialData::Gff, cfg.sim.grid, &mut init_rng)),
            ];
            let r = run_ergodic_average(
                &cfg.sim,
                &target,
                &inits,
                &cfg.ergodic,
                &cfg.observables,
                &samples,
                &master.derive(1),
            )?;
            let passed = r.agrees(3.0);
            files.write(
                &r.table,
                &WithChain {
                    chain,
                    report: &r,
                    passed: Some(passed),
                },
            )?;
            Some(passed)
        }
        Command::Propcheck => {
            let r = run_property_suite(cfg.propcheck_trials, &master);
            let mut table = RecordTable::new(vec!["running_sup".into()]);
            for (i, e) in r.entries.iter().enumerate() {
                for (n, v) in e.report.trace.iter().enumerate() {
                    table.push(i as u64, (n + 1) as f64, vec![*v]);
                }
            }
            files.write(&table, &r)?;
            Some(r.passed)
        }
    };
    Ok(CommandOutcome {
        records,
        summary,
        passed,
    })
}
