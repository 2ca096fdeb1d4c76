use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use riscrs_core::ao::{run_ao, AoOptions, Strategy};
use riscrs_core::channel::build_channel_set;
use riscrs_core::harness::{
    rows_to_csv, run_convergence_trace, run_oracle_check, run_ris_elements_sweep, run_snr_sweep, write_csv,
    SweepKind, SweepSpec,
};
use riscrs_core::oracle::GridSpec;
use riscrs_core::ScenarioConfig;

#[derive(Parser)]
#[command(name = "riscrs", version, about = "RIS-aided cooperative rate splitting: optimization and Monte Carlo sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Random phase initializations per run; the best is kept.
    #[arg(long, default_value_t = 3)]
    starts: usize,
    /// Comma-separated strategy tags, e.g. RIS_CRS,NORIS_CRS.
    #[arg(long, default_value = "all")]
    strategies: String,
}

#[derive(Subcommand)]
enum Command {
    /// Max-min rate versus SNR.
    SweepSnr {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        /// SNR range start:step:stop in dB, or a single value.
        #[arg(long, default_value = "0:5:30")]
        snr: String,
        /// Record wall-clock time per run (output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Max-min rate versus the number of RIS elements.
    SweepN {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        /// Comma-separated element counts.
        #[arg(long, default_value = "2,4,6,8")]
        n: String,
        #[arg(long, default_value = "15")]
        snr: String,
        #[arg(long)]
        timing: bool,
    },
    /// Objective per outer iteration on one realization.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value = "15")]
        snr: String,
    },
    /// Compares the optimizer with a brute-force grid on single-antenna instances.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Number of seeds, starting at the base seed.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value = "0,1")]
        n: String,
        #[arg(long, default_value_t = 16)]
        phase_points: usize,
        #[arg(long, default_value_t = 11)]
        power_grid: usize,
        /// Allowed shortfall of the optimizer against the grid, bits/s/Hz.
        #[arg(long, default_value_t = 0.05)]
        slack: f64,
    },
    /// Optimizes one realization and prints the solution as JSON.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "RIS_CRS")]
        strategy: String,
    },
    /// Prints the effective scenario configuration as TOML.
    DumpConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_strategies(s: &str) -> Result<Vec<Strategy>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Strategy::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let st: Strategy = part.parse()?;
        if !out.contains(&st) {
            out.push(st);
        }
    }
    if out.is_empty() {
        bail!("no strategies given");
    }
    Ok(out)
}

/// `a:b:c` (start, step, stop inclusive) or a single number.
fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().with_context(|| format!("bad number {p:?} in {s:?}"));
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, c] => {
            let (start, step, stop) = (num(a)?, num(b)?, num(c)?);
            if !step.is_finite() || step <= 0.0 || stop < start {
                bail!("range {s:?} needs a positive step and stop >= start");
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => bail!("expected start:step:stop or a single value, got {s:?}"),
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    let v = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad count {p:?}")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty list {s:?}");
    }
    Ok(v)
}

fn emit<T: serde::Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    match out {
        Some(p) => write_csv(p, rows).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&rows_to_csv(rows)?)?,
    }
    Ok(())
}

fn sweep_spec(kind: SweepKind, common: &Common, trials: usize, snr: Vec<f64>, n: Vec<usize>, timing: bool) -> Result<SweepSpec> {
    let spec = SweepSpec {
        kind,
        snr_values_db: snr,
        n_values: n,
        trials,
        strategies: parse_strategies(&common.strategies)?,
        n_starts: common.starts,
        out_path: common.out.clone(),
        timing,
    };
    spec.validate()?;
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepSnr { common, trials, snr, timing } => {
            let cfg = load_config(common.config.as_deref(), common.seed)?;
            let spec = sweep_spec(SweepKind::SnrSweep, &common, trials, parse_range(&snr)?, vec![], timing)?;
            emit(common.out.as_deref(), &run_snr_sweep(&cfg, &spec)?)
        }
        Command::SweepN { common, trials, n, snr, timing } => {
            let cfg = load_config(common.config.as_deref(), common.seed)?;
            let spec = sweep_spec(SweepKind::RisElementsSweep, &common, trials, parse_range(&snr)?, parse_list(&n)?, timing)?;
            emit(common.out.as_deref(), &run_ris_elements_sweep(&cfg, &spec)?)
        }
        Command::Trace { common, n, snr } => {
            let cfg = load_config(common.config.as_deref(), common.seed)?;
            let spec = sweep_spec(SweepKind::ConvergenceTrace, &common, 1, parse_range(&snr)?, vec![n], false)?;
            emit(common.out.as_deref(), &run_convergence_trace(&cfg, &spec)?)
        }
        Command::OracleCheck { common, trials, n, phase_points, power_grid, slack } => {
            let cfg = load_config(common.config.as_deref(), common.seed)?;
            let grid = GridSpec { phase_points, power_grid, ..GridSpec::default() };
            let seeds: Vec<u64> = (0..trials as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
            let rows = run_oracle_check(&cfg, &parse_list(&n)?, &seeds, common.starts, &grid, slack)?;
            let passed = rows.iter().filter(|r| r.pass).count();
            eprintln!("oracle check: {passed}/{} instances within {slack} bits/s/Hz of the grid", rows.len());
            emit(common.out.as_deref(), &rows)
        }
        Command::Solve { common, strategy } => {
            let cfg = load_config(common.config.as_deref(), common.seed)?;
            let strategy: Strategy = strategy.parse()?;
            let ch = build_channel_set(&cfg, cfg.seed)?;
            let opts = AoOptions { n_starts: common.starts, ..AoOptions::from_config(&cfg) };
            let sol = run_ao(&ch, strategy, &opts)?;
            let json = serde_json::to_string_pretty(&sol.to_record())?;
            match common.out {
                Some(p) => std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::DumpConfig { config } => {
            let cfg = load_config(config.as_deref(), None)?;
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:5:30").unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(parse_range("15").unwrap(), vec![15.0]);
        assert!(parse_range("0:0:5").is_err());
        assert!(parse_range("a").is_err());
        assert_eq!(parse_list("2,4, 8").unwrap(), vec![2, 4, 8]);
        assert!(parse_list("").is_err());
    }

    #[test]
    fn strategies() {
        assert_eq!(parse_strategies("all").unwrap().len(), 6);
        assert_eq!(parse_strategies("RIS_CRS,ris_crs").unwrap(), vec![Strategy::RisCrs]);
        assert!(parse_strategies("bogus").is_err());
    }
}
