//! Speed × mode × seed sweeps run in parallel, written as CSV.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run_scenario, ScenarioConfig, SimError};
use crate::metrics::{aggregate_sweep, MetricsError, MetricsRecord, Mode, SweepKey};
use crate::trace::emit_trace;

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("run speed={speed} mode={mode} seed={seed}: {source}")]
    Run {
        speed: f64,
        mode: Mode,
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("writing {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone)]
pub struct ExperimentMatrix {
    pub base: ScenarioConfig,
    pub speeds: Vec<f64>,
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    pub traces: bool,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub key: SweepKey,
    pub metrics: MetricsRecord,
    pub trace: Vec<String>,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    speed: f64,
    mode: &'static str,
    seed: u64,
    pdr: f64,
    throughput_bps: f64,
    originated: u64,
    delivered: u64,
    absorbed: u64,
}

#[derive(Debug, Serialize)]
struct SweepCsvRow {
    speed: f64,
    mode: &'static str,
    runs: usize,
    pdr_mean: f64,
    pdr_min: f64,
    pdr_max: f64,
    throughput_mean: f64,
    throughput_min: f64,
    throughput_max: f64,
}

impl ExperimentMatrix {
    /// Cells in output order: speed, then mode, then seed.
    pub fn cells(&self) -> Vec<SweepKey> {
        let mut out = Vec::with_capacity(self.speeds.len() * self.modes.len() * self.seeds.len());
        for &speed in &self.speeds {
            for &mode in &self.modes {
                for &seed in &self.seeds {
                    out.push(SweepKey { speed, mode, seed });
                }
            }
        }
        out
    }

    pub fn config_for(&self, key: &SweepKey) -> ScenarioConfig {
        let mut cfg = self.base.with_mode(key.mode);
        cfg.speed = key.speed;
        cfg.seed = key.seed;
        cfg
    }

    pub fn run(&self) -> Result<Vec<CellResult>, MatrixError> {
        self.cells()
            .into_par_iter()
            .map(|key| {
                let res = run_scenario(&self.config_for(&key), self.traces).map_err(|source| MatrixError::Run {
                    speed: key.speed,
                    mode: key.mode,
                    seed: key.seed,
                    source,
                })?;
                Ok(CellResult { key, metrics: res.metrics, trace: res.trace })
            })
            .collect()
    }
}

/// Writes `summary.csv`, `sweep.csv` and, when traces were kept,
/// `trace_<speed>_<mode>_<seed>.txt` into `dir`.
pub fn write_results(dir: &Path, cells: &[CellResult]) -> Result<(), MatrixError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| MatrixError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let path = dir.join("summary.csv");
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| MatrixError::Csv { path, source }
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    for c in cells {
        let t = &c.metrics.totals;
        w.serialize(SummaryRow {
            speed: c.key.speed,
            mode: c.key.mode.as_str(),
            seed: c.key.seed,
            pdr: c.metrics.pdr,
            throughput_bps: c.metrics.throughput_bps,
            originated: t.originated,
            delivered: t.delivered,
            absorbed: t.absorbed,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("sweep.csv");
    let records: Vec<_> = cells.iter().map(|c| (c.key, c.metrics.clone())).collect();
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    for r in aggregate_sweep(&records)? {
        w.serialize(SweepCsvRow {
            speed: r.speed,
            mode: r.mode.as_str(),
            runs: r.runs,
            pdr_mean: r.pdr.mean,
            pdr_min: r.pdr.min,
            pdr_max: r.pdr.max,
            throughput_mean: r.throughput_bps.mean,
            throughput_min: r.throughput_bps.min,
            throughput_max: r.throughput_bps.max,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    for c in cells.iter().filter(|c| !c.trace.is_empty()) {
        let name = format!("trace_{}_{}_{}.txt", c.key.speed, c.key.mode.as_str().replace('+', "-"), c.key.seed);
        let path = dir.join(name);
        let f = fs::File::create(&path).map_err(io_err(&path))?;
        emit_trace(&c.trace, io::BufWriter::new(f)).map_err(io_err(&path))?;
    }
    Ok(())
}
