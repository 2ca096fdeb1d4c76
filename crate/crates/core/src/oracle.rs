//! Brute-force reference solutions for tiny instances.
//!
//! [`grid_search`] enumerates RIS phases on a uniform grid, matched-filter
//! precoders with a lattice of power splits over the three streams, and a
//! list of time fractions; the common-rate shares are then set in closed
//! form by [`allocate_common_rate`]. With one antenna the precoder grid is
//! exhaustive up to a global phase; with more it is a lower bound.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::ao::Strategy;
use crate::channel::ChannelSet;
use crate::linalg::{norm_sqr, CVec};
use crate::rates::{effective_channel, evaluate_design, phase2_closed_form, PhaseConfig, TxDesign};
use crate::{Error, Result};

/// Exact maximizer of `min(r1 + a1, r2 + a2)` over `a1 + a2 <= rc`,
/// `a >= 0`. The common rate goes to the weaker user until the two totals
/// meet, then is split evenly. Returns `(a1, a2, t)`.
pub fn allocate_common_rate(r1: f64, r2: f64, rc: f64) -> Result<(f64, f64, f64)> {
    for (name, v) in [("r1", r1), ("r2", r2), ("rc", rc)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    let gap = (r1 - r2).abs();
    let (to_weak, rest) = if rc <= gap { (rc, 0.0) } else { (gap, rc - gap) };
    let (mut a1, mut a2) = if r1 <= r2 { (to_weak, 0.0) } else { (0.0, to_weak) };
    a1 += rest / 2.0;
    a2 += rest / 2.0;
    let t = (r1 + a1).min(r2 + a2);
    Ok((a1, a2, t))
}

/// Grid resolution of [`grid_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Phases per RIS element, uniform on `[0, 2 pi)`.
    pub phase_points: usize,
    /// Power levels per stream; splits are the lattice points
    /// `(i, j, k) / (power_grid - 1)` with `i + j + k = power_grid - 1`.
    pub power_grid: usize,
    pub beta_grid: Vec<f64>,
    /// Largest number of grid points allowed.
    pub budget: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            phase_points: 16,
            power_grid: 11,
            beta_grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            budget: 5_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub design: TxDesign,
    pub phases: PhaseConfig,
    pub t: f64,
    pub evaluated: usize,
}

/// Power fractions `(q0, q1, q2)` on the simplex lattice, lexicographic.
pub fn power_splits(levels: usize, zero_common: bool) -> Vec<[f64; 3]> {
    if levels == 0 {
        return Vec::new();
    }
    let m = levels - 1;
    if m == 0 {
        return vec![if zero_common { [0.0, 0.5, 0.5] } else { [1.0 / 3.0; 3] }];
    }
    let mut out = Vec::new();
    for i in 0..=m {
        if zero_common && i > 0 {
            break;
        }
        for j in 0..=(m - i) {
            let k = m - i - j;
            out.push([i as f64 / m as f64, j as f64 / m as f64, k as f64 / m as f64]);
        }
    }
    out
}

fn unit(g: &CVec) -> CVec {
    let n = norm_sqr(g).sqrt();
    if n > 0.0 {
        g / Complex64::new(n, 0.0)
    } else {
        let nt = g.len();
        CVec::from_element(nt, Complex64::new(1.0 / (nt as f64).sqrt(), 0.0))
    }
}

/// Exhaustive max-min search over the grid described by `spec`, restricted
/// by the strategy (no phases without RIS, `beta = 1` for RSMA, no common
/// stream for SDMA). Ties keep the first point in lexicographic grid order.
pub fn grid_search(ch: &ChannelSet, spec: &GridSpec, strategy: Strategy, pt: f64, pr: f64) -> Result<GridResult> {
    let ch = if strategy.use_ris() { ch.clone() } else { ch.without_ris() };
    let n = ch.n_ris();
    if spec.phase_points == 0 || spec.power_grid == 0 || spec.beta_grid.is_empty() {
        return Err(Error::invalid("grid dimensions must be positive"));
    }
    let betas: Vec<f64> = if strategy.fix_beta_one() { vec![1.0] } else { spec.beta_grid.clone() };
    if betas.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
        return Err(Error::invalid("beta grid values must lie in (0, 1]"));
    }
    let splits = power_splits(spec.power_grid, strategy.zero_common());
    let n_phases = (spec.phase_points as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let total = n_phases.saturating_mul(splits.len() as u128).saturating_mul(betas.len() as u128);
    if total > spec.budget as u128 {
        return Err(Error::invalid(format!("grid has {total} points, budget is {}", spec.budget)));
    }
    let n_phases = n_phases as usize;
    let step = 2.0 * PI / spec.phase_points as f64;
    let theta2 = phase2_closed_form(&ch);

    let best_for_phases = |idx: usize| -> Result<(f64, TxDesign, PhaseConfig)> {
        let mut rem = idx;
        let mut angles = vec![0.0; n];
        for a in angles.iter_mut().rev() {
            *a = (rem % spec.phase_points) as f64 * step;
            rem /= spec.phase_points;
        }
        let theta1 = CVec::from_iterator(n, angles.iter().map(|&a| Complex64::from_polar(1.0, a)));
        let phases = PhaseConfig { theta1, theta2: theta2.clone() };
        let g = [effective_channel(1, &ch, &phases.theta1)?, effective_channel(2, &ch, &phases.theta1)?];
        let weaker = if norm_sqr(&g[0]) <= norm_sqr(&g[1]) { 0 } else { 1 };
        let dirs = [unit(&g[weaker]), unit(&g[0]), unit(&g[1])];
        let mut best: Option<(f64, TxDesign)> = None;
        for q in &splits {
            let mut p = DMatrix::zeros(ch.nt(), 3);
            for i in 0..3 {
                p.set_column(i, &(&dirs[i] * Complex64::new((q[i] * pt).sqrt(), 0.0)));
            }
            for &beta in &betas {
                let mut d = TxDesign { p: p.clone(), pr, a: [0.0, 0.0], beta, pt };
                let r = evaluate_design(&ch, &phases, &d);
                let (a1, a2, t) = allocate_common_rate(r.r1_1, r.r2_1, r.rc.max(0.0))?;
                d.a = [a1, a2];
                if best.as_ref().is_none_or(|(bt, _)| t > *bt) {
                    best = Some((t, d));
                }
            }
        }
        let (t, d) = best.expect("grid is nonempty");
        Ok((t, d, phases))
    };

    let results: Vec<(f64, TxDesign, PhaseConfig)> =
        (0..n_phases).into_par_iter().map(best_for_phases).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 > results[best].0 {
            best = i;
        }
    }
    let (t, design, phases) = results.into_iter().nth(best).expect("at least one phase point");
    Ok(GridResult { design, phases, t, evaluated: total as usize })
}
