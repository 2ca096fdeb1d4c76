//! Monte Carlo experiment driver and CSV output.
//!
//! Every sweep draws one channel realization per (trial, parameter point)
//! with seed `cfg.seed + trial` and runs all requested strategies on it, so
//! strategies are compared on identical channels. Runs are spread over a
//! thread pool and collected into rows sorted by (strategy, parameter,
//! trial), which makes the output independent of scheduling.
//!
//! CSV columns (header row included):
//!
//! | file | columns |
//! |---|---|
//! | sweeps | `strategy,snr_db,n_ris,nt,trial,seed,min_rate,iters_outer,wall_ms` |
//! | trace | `strategy,snr_db,n_ris,nt,seed,iteration,min_rate` |
//! | oracle check | `n_ris,seed,grid_min_rate,alg_min_rate,gap,pass` |
//!
//! `wall_ms` is 0 unless timing is requested, so repeated runs are
//! byte-identical by default.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao::{run_ao, AoOptions, Strategy};
use crate::channel::build_channel_set;
use crate::config::ScenarioConfig;
use crate::oracle::{grid_search, GridSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    SnrSweep,
    RisElementsSweep,
    ConvergenceTrace,
}

/// What to run. `snr_values_db` and `n_values` are used according to `kind`:
/// the SNR sweep uses `cfg.n_ris`, the element sweep and the trace use the
/// first SNR value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub snr_values_db: Vec<f64>,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub strategies: Vec<Strategy>,
    pub n_starts: usize,
    pub out_path: Option<PathBuf>,
    /// Record wall-clock time per run (makes output non-reproducible).
    pub timing: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.strategies.is_empty() {
            return Err(Error::invalid("no strategies selected"));
        }
        if self.snr_values_db.is_empty() || self.snr_values_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("SNR list must be nonempty and finite"));
        }
        if self.kind == SweepKind::RisElementsSweep && self.n_values.is_empty() {
            return Err(Error::invalid("RIS element list must be nonempty"));
        }
        if self.kind == SweepKind::ConvergenceTrace && self.trials != 1 {
            return Err(Error::invalid("a convergence trace uses exactly one trial"));
        }
        Ok(())
    }
}

/// One (strategy, parameter point, trial) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub strategy: Strategy,
    pub snr_db: f64,
    pub n_ris: usize,
    pub nt: usize,
    pub trial: usize,
    pub seed: u64,
    pub min_rate: f64,
    pub iters_outer: usize,
    pub wall_ms: u64,
}

/// One outer iteration of a convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub strategy: Strategy,
    pub snr_db: f64,
    pub n_ris: usize,
    pub nt: usize,
    pub seed: u64,
    pub iteration: usize,
    pub min_rate: f64,
}

/// Algorithm versus grid oracle on one tiny instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub n_ris: usize,
    pub seed: u64,
    pub grid_min_rate: f64,
    pub alg_min_rate: f64,
    pub gap: f64,
    pub pass: bool,
}

struct Job {
    strategy: Strategy,
    snr_db: f64,
    n_ris: usize,
    trial: usize,
}

fn run_jobs(cfg: &ScenarioConfig, spec: &SweepSpec, jobs: Vec<Job>) -> Result<Vec<ResultRow>> {
    let mut rows = jobs
        .into_par_iter()
        .map(|job| -> Result<ResultRow> {
            let point = ScenarioConfig { n_ris: job.n_ris, ..cfg.clone() }.with_snr_db(job.snr_db);
            let seed = cfg.seed.wrapping_add(job.trial as u64);
            let ch = build_channel_set(&point, seed)?;
            let opts = AoOptions { n_starts: spec.n_starts, seed, ..AoOptions::from_config(&point) };
            let clock = Instant::now();
            let sol = run_ao(&ch, job.strategy, &opts)?;
            let wall_ms = if spec.timing { clock.elapsed().as_millis() as u64 } else { 0 };
            Ok(ResultRow {
                strategy: job.strategy,
                snr_db: job.snr_db,
                n_ris: job.n_ris,
                nt: point.nt,
                trial: job.trial,
                seed,
                min_rate: sol.min_rate(),
                iters_outer: sol.outer_iterations(),
                wall_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.strategy
            .cmp(&b.strategy)
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.n_ris.cmp(&b.n_ris))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

/// Max-min rate versus SNR at `cfg.n_ris` elements.
pub fn run_snr_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &strategy in &spec.strategies {
        for &snr_db in &spec.snr_values_db {
            for trial in 0..spec.trials {
                jobs.push(Job { strategy, snr_db, n_ris: cfg.n_ris, trial });
            }
        }
    }
    run_jobs(cfg, spec, jobs)
}

/// Max-min rate versus the number of RIS elements at the first SNR value.
pub fn run_ris_elements_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    cfg.validate()?;
    let snr_db = spec.snr_values_db[0];
    let mut jobs = Vec::new();
    for &strategy in &spec.strategies {
        for &n_ris in &spec.n_values {
            for trial in 0..spec.trials {
                jobs.push(Job { strategy, snr_db, n_ris, trial });
            }
        }
    }
    run_jobs(cfg, spec, jobs)
}

/// Per-outer-iteration exact objective of every strategy on one
/// realization (seed `cfg.seed`), at the first SNR value and the first
/// element count (or `cfg.n_ris` when `n_values` is empty).
pub fn run_convergence_trace(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<TraceRow>> {
    spec.validate()?;
    let snr_db = spec.snr_values_db[0];
    let n_ris = spec.n_values.first().copied().unwrap_or(cfg.n_ris);
    let point = ScenarioConfig { n_ris, ..cfg.clone() }.with_snr_db(snr_db);
    point.validate()?;
    let ch = build_channel_set(&point, point.seed)?;
    let opts = AoOptions { n_starts: spec.n_starts, ..AoOptions::from_config(&point) };
    let sols = spec
        .strategies
        .par_iter()
        .map(|&s| run_ao(&ch, s, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut order: Vec<usize> = (0..sols.len()).collect();
    order.sort_by_key(|&i| spec.strategies[i]);
    for i in order {
        let sol = &sols[i];
        for (iteration, &min_rate) in sol.ao_trace.iter().enumerate() {
            rows.push(TraceRow {
                strategy: sol.strategy,
                snr_db,
                n_ris,
                nt: point.nt,
                seed: point.seed,
                iteration,
                min_rate,
            });
        }
    }
    Ok(rows)
}

/// Runs the CRS strategy against the grid oracle on single-antenna
/// instances, one per (element count, seed).
pub fn run_oracle_check(
    cfg: &ScenarioConfig,
    n_values: &[usize],
    seeds: &[u64],
    n_starts: usize,
    grid: &GridSpec,
    slack: f64,
) -> Result<Vec<OracleRow>> {
    let mut jobs = Vec::new();
    for &n in n_values {
        for &seed in seeds {
            jobs.push((n, seed));
        }
    }
    jobs.into_par_iter()
        .map(|(n_ris, seed)| -> Result<OracleRow> {
            let point = ScenarioConfig { nt: 1, n_ris, seed, ..cfg.clone() };
            point.validate()?;
            let ch = build_channel_set(&point, seed)?;
            let strategy = if n_ris == 0 { Strategy::NorisCrs } else { Strategy::RisCrs };
            let g = grid_search(&ch, grid, strategy, point.pt_watts(), point.pr_watts())?;
            let opts = AoOptions { n_starts, ..AoOptions::from_config(&point) };
            let sol = run_ao(&ch, strategy, &opts)?;
            let gap = g.t - sol.min_rate();
            Ok(OracleRow {
                n_ris,
                seed,
                grid_min_rate: g.t,
                alg_min_rate: sol.min_rate(),
                gap,
                pass: gap <= slack,
            })
        })
        .collect()
}

/// Serializes rows as CSV with a header.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes rows to `path` through a temporary file in the same directory, so
/// a failed write never leaves a partial file behind.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let bytes = rows_to_csv(rows)?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| Error::invalid("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.partial", name.to_string_lossy()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Reads rows written by [`write_csv`].
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Mean `min_rate` of one strategy at rows matching `filter`.
pub fn mean_rate(rows: &[ResultRow], strategy: Strategy, filter: impl Fn(&ResultRow) -> bool) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter(|r| r.strategy == strategy && filter(r)).map(|r| r.min_rate).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
