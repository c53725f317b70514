use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{in_half_space, FourierField, GridSpec, Mode};

/// Identity stamped on every record and summary of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMeta {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl RunMeta {
    pub fn new(experiment: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// `name:hash-prefix:seed`.
    pub fn experiment_id(&self) -> String {
        let short = &self.config_hash[..self.config_hash.len().min(12)];
        format!("{}:{}:{}", self.experiment, short, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub trajectory_id: u64,
    pub time: f64,
    /// One value per column of the owning table.
    pub values: Vec<f64>,
}

/// Append-only rows sharing one set of observable columns.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordTable {
    pub columns: Vec<String>,
    pub rows: Vec<ExperimentRecord>,
}

impl RecordTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, trajectory_id: u64, time: f64, values: Vec<f64>) {
        assert_eq!(values.len(), self.columns.len(), "record width");
        self.rows.push(ExperimentRecord {
            trajectory_id,
            time,
            values,
        });
    }

    pub fn extend(&mut self, other: RecordTable) {
        assert_eq!(self.columns, other.columns, "record columns");
        self.rows.extend(other.rows);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// CSV with header `experiment_id,trajectory_id,time,<columns>`.
    /// Numbers use the shortest round-trip decimal form.
    pub fn write_csv(&self, path: &Path, meta: &RunMeta) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["experiment_id".to_string(), "trajectory_id".into(), "time".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        let id = meta.experiment_id();
        for r in &self.rows {
            let mut row = vec![id.clone(), r.trajectory_id.to_string(), r.time.to_string()];
            row.extend(r.values.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    experiment_id: String,
    #[serde(flatten)]
    meta: &'a RunMeta,
    config: &'a str,
    results: &'a T,
}

/// JSON summary with the run identity and the config echo.
pub fn write_summary<T: Serialize>(path: &Path, meta: &RunMeta, config_echo: &str, results: &T) -> Result<()> {
    let s = Summary {
        experiment_id: meta.experiment_id(),
        meta,
        config: config_echo,
        results,
    };
    let mut text = serde_json::to_string_pretty(&s)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Creates `dir` if needed and checks that it accepts files.
pub fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe: PathBuf = dir.join(".write_probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Column layout of a field sample file: `c_0_0`, then `re_k1_k2`,
/// `im_k1_k2` for each half-space mode.
fn sample_columns(grid: GridSpec) -> Vec<(Mode, bool, String)> {
    let mut cols = vec![([0, 0], true, "c_0_0".to_string())];
    for k in grid.modes().filter(|&k| in_half_space(k)) {
        cols.push((k, true, format!("re_{}_{}", k[0], k[1])));
        cols.push((k, false, format!("im_{}_{}", k[0], k[1])));
    }
    cols
}

/// Writes fields as rows of Fourier coefficients.
pub fn write_samples(path: &Path, samples: &[FourierField]) -> Result<()> {
    let grid = match samples.first() {
        Some(f) => f.grid(),
        None => return Err(Error::InvalidParameter("no samples to write".into())),
    };
    let cols = sample_columns(grid);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sample_id".to_string(), format!("side_{}", grid.side())];
    header.extend(cols.iter().map(|c| c.2.clone()));
    w.write_record(&header)?;
    for (i, f) in samples.iter().enumerate() {
        f.check_grid(&FourierField::zeros(grid))?;
        let mut row = vec![i.to_string(), String::new()];
        row.extend(cols.iter().map(|&(k, re, _)| {
            let c = f.coeff(k);
            if re { c.re } else { c.im }.to_string()
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_samples`].
pub fn read_samples(path: &Path) -> Result<Vec<FourierField>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let bad = |m: &str| Error::Config(format!("{}: {m}", path.display()));
    let side = header
        .get(1)
        .and_then(|s| s.strip_prefix("side_"))
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| bad("missing grid side column"))?;
    let half = (header.len() - 3) / 2;
    let cutoff = ((((2 * half + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    let grid = GridSpec::new(cutoff, side)?;
    let cols = sample_columns(grid);
    if cols.len() + 2 != header.len() || cols.iter().zip(header.iter().skip(2)).any(|(c, h)| c.2 != h) {
        return Err(bad("unexpected column layout"));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>().map_err(|_| bad("non-numeric coefficient")))
            .collect::<Result<Vec<_>>>()?;
        let mut coeff = std::collections::HashMap::new();
        coeff.insert([0i64, 0i64], Complex64::new(vals[0], 0.0));
        for (j, k) in grid.modes().filter(|&k| in_half_space(k)).enumerate() {
            coeff.insert(k, Complex64::new(vals[1 + 2 * j], vals[2 + 2 * j]));
        }
        out.push(FourierField::from_fn(grid, |k| coeff[&k]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::stochastic::sample_gff;

    #[test]
    fn samples_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        for n in [0, 1, 3] {
            let grid = GridSpec::dealiased(n);
            let mut rng = RngStream::new(111, n as u64);
            let fields: Vec<_> = (0..5).map(|_| sample_gff(grid, &mut rng)).collect();
            write_samples(&path, &fields).unwrap();
            assert_eq!(read_samples(&path).unwrap(), fields);
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let meta = RunMeta::new("demo", "abcdef0123456789", 7);
        let mut t = RecordTable::new(vec!["a".into(), "b".into()]);
        t.push(0, 0.1, vec![1.0, -2.5]);
        t.push(1, 0.2, vec![0.1 + 0.2, f64::NAN]);
        t.write_csv(&path, &meta).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "experiment_id,trajectory_id,time,a,b\ndemo:abcdef012345:7,0,0.1,1,-2.5\ndemo:abcdef012345:7,1,0.2,0.30000000000000004,NaN\n"
        );
        assert!(prepare_out_dir(&dir.path().join("x/y")).is_ok());
    }
}
