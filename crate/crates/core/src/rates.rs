//! Exact two-slot rate model.
//!
//! Slot 1 (fraction `beta`): the BS superposes a common stream `p0` and two
//! private streams `p1`, `p2`; each user decodes the common stream first,
//! then its private stream with the other private stream as interference.
//! Slot 2 (fraction `1 - beta`): U1 forwards the common stream to U2 over the
//! direct U1-U2 link plus the RIS reflection.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::linalg::{hdot, norm_sqr, unit_phasor, CMat, CVec};
use crate::{Error, Result, BETA_MIN};

/// Tolerance on `|theta_n| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-9;
/// Slack on `a1 + a2 <= R_c` when classifying a report.
pub const COMMON_RATE_SLACK: f64 = 1e-9;

/// Unit-modulus RIS reflection coefficients for both slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub theta1: CVec,
    pub theta2: CVec,
}

impl PhaseConfig {
    pub fn empty() -> Self {
        Self { theta1: DVector::zeros(0), theta2: DVector::zeros(0) }
    }

    pub fn from_angles(slot1: &[f64], slot2: &[f64]) -> Self {
        Self {
            theta1: DVector::from_iterator(slot1.len(), slot1.iter().map(|&a| unit_phasor(a))),
            theta2: DVector::from_iterator(slot2.len(), slot2.iter().map(|&a| unit_phasor(a))),
        }
    }

    /// Uniform random slot-1 phases; slot 2 uses the closed form.
    pub fn random_slot1<R: Rng + ?Sized>(ch: &ChannelSet, rng: &mut R) -> Self {
        let n = ch.n_ris();
        let theta1 = DVector::from_fn(n, |_, _| unit_phasor(rng.random_range(0.0..2.0 * PI)));
        Self { theta1, theta2: phase2_closed_form(ch) }
    }

    pub fn len(&self) -> usize {
        self.theta1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta1.is_empty()
    }

    pub fn slot1_angles(&self) -> Vec<f64> {
        self.theta1.iter().map(|z| z.arg()).collect()
    }

    pub fn slot2_angles(&self) -> Vec<f64> {
        self.theta2.iter().map(|z| z.arg()).collect()
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.theta1
            .iter()
            .chain(self.theta2.iter())
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Transmit-side design: precoders, relay power, common-rate split and time
/// fraction, together with the BS power budget it must respect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxDesign {
    /// `Nt x 3`, columns `p0` (common), `p1`, `p2`.
    pub p: CMat,
    pub pr: f64,
    pub a: [f64; 2],
    pub beta: f64,
    pub pt: f64,
}

impl TxDesign {
    pub fn zeros(nt: usize, pt: f64, pr: f64) -> Self {
        Self { p: DMatrix::zeros(nt, 3), pr, a: [0.0, 0.0], beta: 1.0, pt }
    }

    pub fn column(&self, i: usize) -> CVec {
        self.p.column(i).into_owned()
    }

    /// `tr(P P^H)`.
    pub fn power(&self) -> f64 {
        self.p.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn common_power(&self) -> f64 {
        self.p.column(0).iter().map(|z| z.norm_sqr()).sum()
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.p.ncols() != 3 {
            v.push(format!("P has {} columns, expected 3", self.p.ncols()));
        }
        if self.power() > self.pt * (1.0 + 1e-9) {
            v.push(format!("tr(PP^H) = {} exceeds Pt = {}", self.power(), self.pt));
        }
        if self.a.iter().any(|&x| !(x >= 0.0)) {
            v.push(format!("negative common-rate share a = {:?}", self.a));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            v.push(format!("time fraction beta = {} outside (0, 1]", self.beta));
        }
        if !(self.pr >= 0.0) {
            v.push(format!("relay power {} is negative", self.pr));
        }
        v
    }
}

/// Exact evaluation of one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub c1_1: f64,
    pub c2_1: f64,
    pub r1_1: f64,
    pub r2_1: f64,
    pub c2_2: f64,
    pub rc: f64,
    pub r_tot: [f64; 2],
    pub min_rate: f64,
    pub feasible: bool,
    pub violations: Vec<String>,
}

/// Signal and interference powers seen by one user in slot 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPowers {
    /// `|g~^H p_i|^2` for i = 0, 1, 2.
    pub stream: [f64; 3],
    pub noise: f64,
}

impl UserPowers {
    pub fn common_sinr(&self) -> f64 {
        self.stream[0] / (self.stream[1] + self.stream[2] + self.noise)
    }

    /// Private SINR of user `k` (1 or 2).
    pub fn private_sinr(&self, k: usize) -> f64 {
        let other = 3 - k;
        self.stream[k] / (self.stream[other] + self.noise)
    }
}

/// `g_k + G^H diag(theta1)^H h_k`, the slot-1 effective channel of user `k`.
pub fn effective_channel(k: usize, ch: &ChannelSet, theta1: &CVec) -> Result<CVec> {
    if !(k == 1 || k == 2) {
        return Err(Error::invalid(format!("user index must be 1 or 2, got {k}")));
    }
    let n = ch.n_ris();
    if theta1.len() != n {
        return Err(Error::invalid(format!(
            "theta1 has {} entries but the RIS has {n}",
            theta1.len()
        )));
    }
    let mut out = ch.direct(k).clone();
    let h = ch.reflect(k);
    for row in 0..n {
        let w = theta1[row].conj() * h[row];
        for col in 0..ch.nt() {
            out[col] += ch.g[(row, col)].conj() * w;
        }
    }
    Ok(out)
}

pub fn user_powers(ch: &ChannelSet, theta1: &CVec, p: &CMat, k: usize) -> Result<UserPowers> {
    if p.nrows() != ch.nt() || p.ncols() != 3 {
        return Err(Error::invalid(format!(
            "P is {}x{}, expected {}x3",
            p.nrows(),
            p.ncols(),
            ch.nt()
        )));
    }
    let geff = effective_channel(k, ch, theta1)?;
    let mut stream = [0.0; 3];
    for (i, s) in stream.iter_mut().enumerate() {
        *s = hdot(&geff, &p.column(i).into_owned()).norm_sqr();
    }
    Ok(UserPowers { stream, noise: ch.noise_power })
}

/// Slot-1 rates `(c1_1, c2_1, r1_1, r2_1)`.
pub fn slot1_rates(ch: &ChannelSet, theta1: &CVec, p: &CMat, beta: f64) -> Result<(f64, f64, f64, f64)> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("beta = {beta} outside (0, 1]")));
    }
    let u1 = user_powers(ch, theta1, p, 1)?;
    let u2 = user_powers(ch, theta1, p, 2)?;
    let rate = |sinr: f64| beta * (1.0 + sinr).log2();
    Ok((
        rate(u1.common_sinr()),
        rate(u2.common_sinr()),
        rate(u1.private_sinr(1)),
        rate(u2.private_sinr(2)),
    ))
}

/// `h12 + h_r2^H diag(theta2) h_1r`.
pub fn relay_composite(ch: &ChannelSet, theta2: &CVec) -> Result<Complex64> {
    let n = ch.n_ris();
    if theta2.len() != n {
        return Err(Error::invalid(format!(
            "theta2 has {} entries but the RIS has {n}",
            theta2.len()
        )));
    }
    let reflected: Complex64 = (0..n).map(|i| ch.h_r2[i].conj() * theta2[i] * ch.h_1r[i]).sum();
    Ok(ch.h12 + reflected)
}

/// Slot-2 spectral efficiency `log2(1 + pr |composite|^2 / sigma^2)`, i.e. the
/// slot-2 common rate before the `1 - beta` factor.
pub fn slot2_spectral_efficiency(ch: &ChannelSet, theta2: &CVec, pr: f64) -> Result<f64> {
    if !(pr >= 0.0) {
        return Err(Error::invalid(format!("relay power must be nonnegative, got {pr}")));
    }
    let comp = relay_composite(ch, theta2)?;
    Ok((1.0 + pr * comp.norm_sqr() / ch.noise_power).log2())
}

pub fn slot2_common_rate(ch: &ChannelSet, theta2: &CVec, pr: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("beta = {beta} outside (0, 1]")));
    }
    if beta == 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - beta) * slot2_spectral_efficiency(ch, theta2, pr)?)
}

/// Slot-2 phases aligning every reflected path with the direct U1-U2 link.
pub fn phase2_closed_form(ch: &ChannelSet) -> CVec {
    let target = if ch.h12.norm() > 0.0 { ch.h12.arg() } else { 0.0 };
    DVector::from_fn(ch.n_ris(), |i, _| {
        let cascade = ch.h_1r[i] * ch.h_r2[i].conj();
        if cascade.norm() > 0.0 {
            unit_phasor(target - cascade.arg())
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Evaluates every rate of the model and classifies feasibility.
pub fn evaluate_design(ch: &ChannelSet, phases: &PhaseConfig, design: &TxDesign) -> RateReport {
    let mut violations = design.violations();
    if phases.max_modulus_error() > UNIT_MODULUS_TOL {
        violations.push(format!(
            "phase modulus error {:.3e} exceeds {UNIT_MODULUS_TOL:e}",
            phases.max_modulus_error()
        ));
    }
    let beta = design.beta.clamp(f64::MIN_POSITIVE, 1.0);
    let slot1 = slot1_rates(ch, &phases.theta1, &design.p, beta);
    let slot2 = slot2_common_rate(ch, &phases.theta2, design.pr.max(0.0), beta);
    let ((c1_1, c2_1, r1_1, r2_1), c2_2) = match (slot1, slot2) {
        (Ok(s1), Ok(s2)) => (s1, s2),
        (Err(e), _) | (_, Err(e)) => {
            violations.push(e.to_string());
            ((0.0, 0.0, 0.0, 0.0), 0.0)
        }
    };
    let rc = c1_1.min(c2_1 + c2_2);
    let r_tot = [r1_1 + design.a[0], r2_1 + design.a[1]];
    let min_rate = r_tot[0].min(r_tot[1]);
    if design.a[0] + design.a[1] > rc + COMMON_RATE_SLACK {
        violations.push(format!(
            "a1 + a2 = {} exceeds R_c = {rc}",
            design.a[0] + design.a[1]
        ));
    }
    RateReport {
        c1_1,
        c2_1,
        r1_1,
        r2_1,
        c2_2,
        rc,
        r_tot,
        min_rate,
        feasible: violations.is_empty(),
        violations,
    }
}

/// Smallest beta accepted by the optimizers.
pub fn clamp_beta(beta: f64) -> f64 {
    beta.clamp(BETA_MIN, 1.0)
}

pub fn private_norm(design: &TxDesign, k: usize) -> f64 {
    norm_sqr(&design.column(k)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::{channel::build_channel_set, rng::stream_rng};
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Nt = 1, N = 1 channel with the given scalars.
    fn scalar_channel(g: f64, gris: f64, h: f64, noise: f64) -> ChannelSet {
        ChannelSet {
            g: dmatrix![c(gris, 0.0)],
            g1: DVector::from_element(1, c(g, 0.0)),
            g2: DVector::from_element(1, c(g, 0.0)),
            h1: DVector::from_element(1, c(h, 0.0)),
            h2: DVector::from_element(1, c(h, 0.0)),
            h12: c(1.0, 0.0),
            h_1r: DVector::from_element(1, c(1.0, 0.0)),
            h_r2: DVector::from_element(1, c(1.0, 0.0)),
            noise_power: noise,
        }
    }

    #[test]
    fn effective_channel_degenerate_cases() {
        let cfg = ScenarioConfig { n_ris: 0, ..Default::default() };
        let ch = build_channel_set(&cfg, 1).unwrap();
        assert_eq!(effective_channel(1, &ch, &DVector::zeros(0)).unwrap(), ch.g1);

        let mut ch = build_channel_set(&ScenarioConfig::default(), 1).unwrap();
        ch.h2.fill(c(0.0, 0.0));
        let th = PhaseConfig::random_slot1(&ch, &mut stream_rng(1, 9)).theta1;
        assert_eq!(effective_channel(2, &ch, &th).unwrap(), ch.g2);
        assert!(effective_channel(3, &ch, &th).is_err());
        assert!(effective_channel(1, &ch, &DVector::zeros(1)).is_err());
    }

    #[test]
    fn effective_channel_destructive_interference() {
        let ch = scalar_channel(1.0, 1.0, 1.0, 1.0);
        let th = DVector::from_element(1, unit_phasor(PI));
        let g = effective_channel(1, &ch, &th).unwrap();
        assert!(g[0].norm() < 1e-15);
    }

    #[test]
    fn slot1_zero_common_precoder() {
        let ch = build_channel_set(&ScenarioConfig::default(), 2).unwrap();
        let th = PhaseConfig::random_slot1(&ch, &mut stream_rng(2, 64)).theta1;
        let mut p = DMatrix::from_element(2, 3, c(0.01, 0.02));
        p.column_mut(0).fill(c(0.0, 0.0));
        let (c1, c2, r1, r2) = slot1_rates(&ch, &th, &p, 1.0).unwrap();
        assert_eq!((c1, c2), (0.0, 0.0));
        assert!(r1 > 0.0 && r2 > 0.0);
    }

    #[test]
    fn slot1_scalar_private_rate() {
        // |g p1|^2 = 3, |g p2|^2 = 1, sigma^2 = 1, no RIS contribution
        let mut ch = scalar_channel(1.0, 0.0, 0.0, 1.0);
        ch.g = DMatrix::zeros(0, 1);
        for v in [&mut ch.h1, &mut ch.h2, &mut ch.h_1r, &mut ch.h_r2] {
            *v = DVector::zeros(0);
        }
        let p = dmatrix![c(0.0, 0.0), c(3f64.sqrt(), 0.0), c(1.0, 0.0)];
        let (_, _, r1, r2) = slot1_rates(&ch, &DVector::zeros(0), &p, 1.0).unwrap();
        assert!((r1 - 2.5f64.log2()).abs() < 1e-14);
        assert!((r2 - (1.0 + 1.0 / 4.0f64).log2()).abs() < 1e-14);
    }

    #[test]
    fn beta_scales_slot1_linearly() {
        let ch = build_channel_set(&ScenarioConfig::default(), 5).unwrap();
        let th = PhaseConfig::random_slot1(&ch, &mut stream_rng(5, 64)).theta1;
        let p = DMatrix::from_fn(2, 3, |i, j| c(0.01 * (i + 1) as f64, 0.003 * j as f64));
        let full = slot1_rates(&ch, &th, &p, 0.8).unwrap();
        let half = slot1_rates(&ch, &th, &p, 0.4).unwrap();
        for (x, y) in [(full.0, half.0), (full.1, half.1), (full.2, half.2), (full.3, half.3)] {
            assert!((x / 2.0 - y).abs() < 1e-14 * x.max(1.0));
        }
    }

    #[test]
    fn slot2_examples() {
        let mut ch = scalar_channel(1.0, 0.0, 0.0, 1.0);
        ch.g = DMatrix::zeros(0, 1);
        for v in [&mut ch.h1, &mut ch.h2, &mut ch.h_1r, &mut ch.h_r2] {
            *v = DVector::zeros(0);
        }
        let none = DVector::zeros(0);
        assert_eq!(slot2_common_rate(&ch, &none, 3.0, 1.0).unwrap(), 0.0);
        assert_eq!(slot2_common_rate(&ch, &none, 0.0, 0.5).unwrap(), 0.0);
        // pr |h12|^2 / sigma^2 = 3, beta = 0.5 -> 0.5 log2 4 = 1
        assert!((slot2_common_rate(&ch, &none, 3.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase2_closed_form_examples() {
        let mut ch = scalar_channel(1.0, 1.0, 1.0, 1.0);
        ch.h_1r = DVector::from_element(1, c(2.0, 0.0));
        ch.h_r2 = DVector::from_element(1, c(0.5, 0.0));
        let th = phase2_closed_form(&ch);
        assert!((th[0] - c(1.0, 0.0)).norm() < 1e-15);

        let mut ch = scalar_channel(1.0, 1.0, 1.0, 1.0);
        ch.h12 = c(0.0, 1.0);
        let th = phase2_closed_form(&ch);
        assert!((th[0].arg() - PI / 2.0).abs() < 1e-15);
        assert!((relay_composite(&ch, &th).unwrap().norm() - 2.0).abs() < 1e-15);

        let mut ch = scalar_channel(1.0, 1.0, 1.0, 1.0);
        ch.h_1r[0] = c(0.0, 0.0);
        assert_eq!(phase2_closed_form(&ch)[0], c(1.0, 0.0));
    }

    #[test]
    fn phase2_closed_form_dominates_random_phases() {
        for seed in 0..20 {
            let cfg = ScenarioConfig { n_ris: 1 + (seed as usize % 8), ..Default::default() };
            let ch = build_channel_set(&cfg, seed).unwrap();
            let best = relay_composite(&ch, &phase2_closed_form(&ch)).unwrap().norm();
            let bound = ch.h12.norm()
                + (0..ch.n_ris()).map(|i| ch.h_1r[i].norm() * ch.h_r2[i].norm()).sum::<f64>();
            assert!((best - bound).abs() <= 1e-12 * bound);
            let mut rng = stream_rng(seed, 99);
            for _ in 0..1000 {
                let th = PhaseConfig::random_slot1(&ch, &mut rng).theta1;
                assert!(relay_composite(&ch, &th).unwrap().norm() <= best * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn common_rate_is_min_of_the_two_paths() {
        let ch = build_channel_set(&ScenarioConfig::default(), 7).unwrap();
        let phases = PhaseConfig::random_slot1(&ch, &mut stream_rng(7, 64));
        let p = DMatrix::from_fn(2, 3, |i, j| c(0.02 + 0.01 * i as f64, 0.01 * j as f64));
        let design = TxDesign { p, pr: 0.03, a: [0.0, 0.0], beta: 0.6, pt: 1.0 };
        let r = evaluate_design(&ch, &phases, &design);
        assert_eq!(r.rc, r.c1_1.min(r.c2_1 + r.c2_2));
        assert_eq!(r.min_rate, r.r1_1.min(r.r2_1));
        assert!(r.feasible, "{:?}", r.violations);
    }

    #[test]
    fn infeasible_designs_are_flagged() {
        let ch = build_channel_set(&ScenarioConfig::default(), 7).unwrap();
        let phases = PhaseConfig::random_slot1(&ch, &mut stream_rng(7, 64));
        let p = DMatrix::from_element(2, 3, c(0.1, 0.0));
        let mut d = TxDesign { p, pr: 0.03, a: [100.0, 0.0], beta: 0.6, pt: 1.0 };
        let r = evaluate_design(&ch, &phases, &d);
        assert!(!r.feasible);
        d.a = [0.0, 0.0];
        d.pt = 1e-6;
        assert!(!evaluate_design(&ch, &phases, &d).feasible);
        d.pt = 1.0;
        let mut bad = phases.clone();
        if !bad.theta1.is_empty() {
            bad.theta1[0] *= 1.1;
            assert!(!evaluate_design(&ch, &bad, &d).feasible);
        }
    }
}
