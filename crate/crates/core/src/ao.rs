//! Alternating optimization of the transmit design and the slot-1 RIS
//! phases, and the six transmission strategies built on it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::ScenarioConfig;
use crate::rates::{evaluate_design, slot2_spectral_efficiency, PhaseConfig, RateReport, TxDesign};
use crate::rng::phase_rng;
use crate::sca_beam::{init_design, run_algorithm1, BeamHooks, BeamIterate, BeamOptions, MONOTONE_SLACK};
use crate::sca_phase::{run_algorithm2, PhaseOptions};
use crate::{Error, Result};

/// Transmission scheme. RSMA fixes the time fraction to 1 (no cooperative
/// slot), SDMA additionally drops the common stream, and the `Noris`
/// variants ignore the RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "RIS_CRS")]
    RisCrs,
    #[serde(rename = "RIS_RSMA")]
    RisRsma,
    #[serde(rename = "RIS_SDMA")]
    RisSdma,
    #[serde(rename = "NORIS_CRS")]
    NorisCrs,
    #[serde(rename = "NORIS_RSMA")]
    NorisRsma,
    #[serde(rename = "NORIS_SDMA")]
    NorisSdma,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::RisCrs,
        Strategy::RisRsma,
        Strategy::RisSdma,
        Strategy::NorisCrs,
        Strategy::NorisRsma,
        Strategy::NorisSdma,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::RisCrs => "RIS_CRS",
            Strategy::RisRsma => "RIS_RSMA",
            Strategy::RisSdma => "RIS_SDMA",
            Strategy::NorisCrs => "NORIS_CRS",
            Strategy::NorisRsma => "NORIS_RSMA",
            Strategy::NorisSdma => "NORIS_SDMA",
        }
    }

    pub fn use_ris(self) -> bool {
        matches!(self, Strategy::RisCrs | Strategy::RisRsma | Strategy::RisSdma)
    }

    pub fn fix_beta_one(self) -> bool {
        !matches!(self, Strategy::RisCrs | Strategy::NorisCrs)
    }

    pub fn zero_common(self) -> bool {
        matches!(self, Strategy::RisSdma | Strategy::NorisSdma)
    }

    /// Same scheme with the RIS removed.
    pub fn without_ris(self) -> Strategy {
        match self {
            Strategy::RisCrs | Strategy::NorisCrs => Strategy::NorisCrs,
            Strategy::RisRsma | Strategy::NorisRsma => Strategy::NorisRsma,
            Strategy::RisSdma | Strategy::NorisSdma => Strategy::NorisSdma,
        }
    }

    pub fn hooks(self) -> BeamHooks {
        apply_strategy_constraints(BeamHooks::default(), self)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag() == up)
            .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?}")))
    }
}

/// Restricts beamforming-subproblem hooks to what `strategy` allows.
pub fn apply_strategy_constraints(mut hooks: BeamHooks, strategy: Strategy) -> BeamHooks {
    if strategy.fix_beta_one() {
        hooks.fixed_beta = Some(1.0);
    }
    if strategy.zero_common() {
        hooks.zero_common = true;
    }
    hooks
}

/// Settings of one alternating-optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct AoOptions {
    pub pt: f64,
    pub pr: f64,
    pub sca_tol: f64,
    pub ao_tol: f64,
    pub max_iters_sca: usize,
    pub max_iters_ao: usize,
    pub solver_tol: f64,
    pub penalty_c: f64,
    /// Independent random phase initializations; the best result is kept.
    pub n_starts: usize,
    /// Seed of the phase initializations.
    pub seed: u64,
}

impl AoOptions {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            pt: cfg.pt_watts(),
            pr: cfg.pr_watts(),
            sca_tol: cfg.sca_tol,
            ao_tol: cfg.ao_tol,
            max_iters_sca: cfg.max_iters_sca,
            max_iters_ao: cfg.max_iters_ao,
            solver_tol: cfg.solver_tol,
            penalty_c: cfg.penalty_c,
            n_starts: 1,
            seed: cfg.seed,
        }
    }
}

/// Result of [`run_ao`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub strategy: Strategy,
    pub design: TxDesign,
    pub phases: PhaseConfig,
    /// Exact evaluation of `(design, phases)`.
    pub report: RateReport,
    /// Exact objective of the start followed by each outer iteration.
    pub ao_trace: Vec<f64>,
    pub iters_algorithm1: Vec<usize>,
    pub iters_algorithm2: Vec<usize>,
    /// Beamforming objective trace of each outer round.
    pub traces_algorithm1: Vec<Vec<f64>>,
    /// Penalized phase objective trace of each outer round (empty without RIS).
    pub traces_algorithm2: Vec<Vec<f64>>,
    /// Multi-start index that produced this solution.
    pub start: usize,
    /// Set when an inner solve failed and the incumbent was returned.
    pub degraded: Option<String>,
}

impl Solution {
    pub fn min_rate(&self) -> f64 {
        self.report.min_rate
    }

    pub fn outer_iterations(&self) -> usize {
        self.ao_trace.len().saturating_sub(1)
    }

    pub fn to_record(&self) -> SolutionRecord {
        let p = &self.design.p;
        SolutionRecord {
            strategy: self.strategy,
            nt: p.nrows(),
            n_ris: self.phases.len(),
            p_re: (0..p.ncols()).map(|i| p.column(i).iter().map(|z| z.re).collect()).collect(),
            p_im: (0..p.ncols()).map(|i| p.column(i).iter().map(|z| z.im).collect()).collect(),
            pt: self.design.pt,
            pr: self.design.pr,
            a: self.design.a,
            beta: self.design.beta,
            theta1_rad: self.phases.slot1_angles(),
            theta2_rad: self.phases.slot2_angles(),
            report: self.report.clone(),
            ao_trace: self.ao_trace.clone(),
            iters_algorithm1: self.iters_algorithm1.clone(),
            iters_algorithm2: self.iters_algorithm2.clone(),
            start: self.start,
            degraded: self.degraded.clone(),
        }
    }
}

/// Flat serializable form of a [`Solution`]: precoder columns as real and
/// imaginary parts, phases as angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub strategy: Strategy,
    pub nt: usize,
    pub n_ris: usize,
    /// `p_re[i][j]`: real part of antenna `j` of stream `i` (0 = common).
    pub p_re: Vec<Vec<f64>>,
    pub p_im: Vec<Vec<f64>>,
    pub pt: f64,
    pub pr: f64,
    pub a: [f64; 2],
    pub beta: f64,
    pub theta1_rad: Vec<f64>,
    pub theta2_rad: Vec<f64>,
    pub report: RateReport,
    pub ao_trace: Vec<f64>,
    pub iters_algorithm1: Vec<usize>,
    pub iters_algorithm2: Vec<usize>,
    pub start: usize,
    pub degraded: Option<String>,
}

/// Channel set a strategy actually sees.
pub fn strategy_channel(ch: &ChannelSet, strategy: Strategy) -> ChannelSet {
    if strategy.use_ris() { ch.clone() } else { ch.without_ris() }
}

/// Runs the alternating optimization for `strategy` from `opts.n_starts`
/// random phase initializations and keeps the best exact objective (ties go
/// to the lower start index).
pub fn run_ao(ch: &ChannelSet, strategy: Strategy, opts: &AoOptions) -> Result<Solution> {
    ch.validate()?;
    let ch = strategy_channel(ch, strategy);
    // without RIS every start is the same deterministic run
    let starts = if ch.n_ris() == 0 { 1 } else { opts.n_starts.max(1) };
    let mut best: Option<Solution> = None;
    for s in 0..starts {
        let phases = PhaseConfig::random_slot1(&ch, &mut phase_rng(opts.seed, s));
        let mut design = init_design(&ch, &phases.theta1, opts.pt, strategy.hooks())?;
        design.pr = opts.pr;
        let mut sol = run_ao_from(&ch, strategy, phases, design, opts)?;
        sol.start = s;
        if best.as_ref().is_none_or(|b| sol.report.min_rate > b.report.min_rate) {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Runs the alternating optimization from a given feasible point. The RIS
/// is used only if `ch` has elements and the strategy allows it.
pub fn run_ao_from(
    ch: &ChannelSet,
    strategy: Strategy,
    phases: PhaseConfig,
    design: TxDesign,
    opts: &AoOptions,
) -> Result<Solution> {
    let ch = strategy_channel(ch, strategy);
    if phases.len() != ch.n_ris() {
        return Err(Error::invalid(format!(
            "{} phases given for {} RIS elements",
            phases.len(),
            ch.n_ris()
        )));
    }
    let hooks = strategy.hooks();
    let beam_opts = BeamOptions {
        pt: opts.pt,
        pr: opts.pr,
        sca_tol: opts.sca_tol,
        max_iters: opts.max_iters_sca,
        solver_tol: opts.solver_tol,
        hooks,
    };
    let phase_opts = PhaseOptions {
        sca_tol: opts.sca_tol,
        max_iters: opts.max_iters_sca,
        solver_tol: opts.solver_tol,
        penalty_c: opts.penalty_c,
    };
    let mut design = TxDesign { pt: opts.pt, pr: opts.pr, ..design };
    let mut phases = phases;
    let mut report = evaluate_design(&ch, &phases, &design);
    if !report.feasible {
        return Err(Error::invalid(format!("starting point is infeasible: {}", report.violations.join("; "))));
    }
    let mut trace = vec![report.min_rate];
    let (mut it1, mut it2) = (Vec::new(), Vec::new());
    let (mut tr1, mut tr2) = (Vec::new(), Vec::new());
    let mut degraded = None;

    for _ in 0..opts.max_iters_ao {
        let prev = report.min_rate;
        let c22 = slot2_spectral_efficiency(&ch, &phases.theta2, opts.pr).unwrap_or(0.0);
        let start = BeamIterate::from_design(&ch, &phases.theta1, &design, c22, hooks)?;
        let (mut next_design, iters) = match run_algorithm1(&ch, &phases, start, &beam_opts) {
            Ok(out) => {
                tr1.push(out.trace);
                (out.design, out.iterations)
            }
            Err(f) => {
                degraded = Some(format!("beamforming solve failed ({:?}) at round {}", f.status, f.iteration));
                tr1.push(f.incumbent.trace);
                (f.incumbent.design, f.incumbent.iterations)
            }
        };
        it1.push(iters);
        let mut next_phases = phases.clone();
        if degraded.is_none() && ch.n_ris() > 0 {
            match run_algorithm2(&ch, &next_design, &phases, &phase_opts) {
                Ok(out) => {
                    next_design.a = out.a;
                    next_phases = out.phases;
                    it2.push(out.iterations);
                    tr2.push(out.trace);
                }
                Err(f) => {
                    degraded = Some(format!("phase solve failed ({:?}) at round {}", f.status, f.iteration));
                    it2.push(f.incumbent.iterations);
                    tr2.push(f.incumbent.trace);
                }
            }
        } else {
            it2.push(0);
        }
        let next_report = evaluate_design(&ch, &next_phases, &next_design);
        if next_report.feasible && next_report.min_rate >= prev - MONOTONE_SLACK {
            design = next_design;
            phases = next_phases;
            report = next_report;
        }
        trace.push(report.min_rate);
        if degraded.is_some() || (report.min_rate - prev).abs() < opts.ao_tol {
            break;
        }
    }
    Ok(Solution {
        strategy,
        design,
        phases,
        report,
        ao_trace: trace,
        iters_algorithm1: it1,
        iters_algorithm2: it2,
        traces_algorithm1: tr1,
        traces_algorithm2: tr2,
        start: 0,
        degraded,
    })
}

/// Re-evaluates `sol` as a point of another strategy's feasible set. RSMA
/// points are CRS points with `beta = 1`; SDMA points are RSMA and CRS
/// points with no common stream. Anything else is rejected.
pub fn embed_solution(ch: &ChannelSet, sol: &Solution, into: Strategy) -> Result<RateReport> {
    if sol.strategy.use_ris() != into.use_ris() {
        return Err(Error::invalid("cannot embed across RIS and no-RIS strategies"));
    }
    let d = &sol.design;
    if into.fix_beta_one() && d.beta != 1.0 {
        return Err(Error::invalid(format!("{into} needs beta = 1, solution has {}", d.beta)));
    }
    if into.zero_common() && (d.common_power() != 0.0 || d.a != [0.0, 0.0]) {
        return Err(Error::invalid(format!("{into} needs a zero common stream")));
    }
    let ch = strategy_channel(ch, into);
    Ok(evaluate_design(&ch, &sol.phases, d))
}
