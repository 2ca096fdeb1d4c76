//! Joint beamforming, common-rate split and time-fraction optimization for
//! fixed RIS phases, by successive convex approximation.
//!
//! Each round solves a convex inner approximation built around the current
//! point: the bilinear terms `beta * alpha` are replaced by the concave lower
//! bound [`phi_lower_bound`], and every SINR constraint
//! `|g~^H p_k|^2 / (interference + noise) >= rho` is convexified by
//! linearizing the quadratic-over-linear term `|g~^H p_k|^2 / rho`. Both
//! surrogates are tight at the expansion point, so the previous solution
//! stays feasible and the objective never decreases.
//!
//! Inside the subproblem channels are normalized by the noise amplitude and
//! precoders by `sqrt(Pt)`, so noise is 1 and the power budget is 1.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::conic::{Affine, ComplexAffine, ConicProblem, SolveStatus, Var};
use crate::linalg::{hdot, norm_sqr, CMat, CVec};
use crate::oracle::allocate_common_rate;
use crate::rates::{
    effective_channel, evaluate_design, slot2_spectral_efficiency, user_powers, PhaseConfig,
    RateReport, TxDesign,
};
use crate::{Error, Result, BETA_MIN};

/// Lower bound on every SINR slack; keeps the linearized SINR constraints
/// well defined.
pub const SINR_FLOOR: f64 = 1e-8;
/// Allowed decrease of the objective between consecutive rounds.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// Strategy restrictions applied while building the beamforming subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BeamHooks {
    /// Replace the time fraction variable by this constant.
    pub fixed_beta: Option<f64>,
    /// Pin `p0 = 0` and `a = (0, 0)` and drop the common-stream constraints.
    pub zero_common: bool,
}

/// Point of the beamforming SCA: design variables plus rate/SINR slacks.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamIterate {
    pub p: CMat,
    pub beta: f64,
    pub a: [f64; 2],
    pub t: f64,
    pub alpha: [f64; 2],
    pub alpha_c: [f64; 2],
    pub rho: [f64; 2],
    pub rho_c: [f64; 2],
}

/// `(1/2)(b0 + a0)(b + a) - (1/4)(b0 + a0)^2 - (1/4)(b - a)^2`, a concave
/// minorant of `b * a` that is tight at `(b0, a0)`.
pub fn phi_lower_bound(beta: f64, alpha: f64, beta_ref: f64, alpha_ref: f64) -> f64 {
    let s = beta_ref + alpha_ref;
    0.5 * s * (beta + alpha) - 0.25 * s * s - 0.25 * (beta - alpha) * (beta - alpha)
}

/// Linearization of `|z|^2 / rho` at `(z_ref, rho_ref)`:
/// `2 Re{z_ref^* z} / rho_ref - |z_ref|^2 rho / rho_ref^2`.
pub fn quad_over_lin_lower_bound(z: Complex64, rho: f64, z_ref: Complex64, rho_ref: f64) -> f64 {
    2.0 * (z_ref.conj() * z).re / rho_ref - z_ref.norm_sqr() * rho / (rho_ref * rho_ref)
}

impl BeamIterate {
    /// Design carried by this iterate.
    pub fn design(&self, pt: f64, pr: f64) -> TxDesign {
        TxDesign { p: self.p.clone(), pr, a: self.a, beta: self.beta, pt }
    }

    /// Builds an iterate at `design` with every slack set to its exact value,
    /// so each constraint holds with equality or slack. Streams whose SINR is
    /// below the floor receive a vanishing share of power first.
    pub fn from_design(
        ch: &ChannelSet,
        theta1: &CVec,
        design: &TxDesign,
        c22_coeff: f64,
        hooks: BeamHooks,
    ) -> Result<Self> {
        let mut design = design.clone();
        if let Some(b) = hooks.fixed_beta {
            design.beta = b;
        }
        if hooks.zero_common {
            design.p.column_mut(0).fill(Complex64::new(0.0, 0.0));
            design.a = [0.0, 0.0];
        }
        if design.pt > 0.0 {
            lift_weak_streams(ch, theta1, &mut design, hooks)?;
        }
        let beta = design.beta;
        let u = [
            user_powers(ch, theta1, &design.p, 1)?,
            user_powers(ch, theta1, &design.p, 2)?,
        ];
        let rho = [u[0].private_sinr(1), u[1].private_sinr(2)];
        let rho_c = if hooks.zero_common {
            [0.0, 0.0]
        } else {
            [u[0].common_sinr(), u[1].common_sinr()]
        };
        let alpha = rho.map(|r| (1.0 + r).log2());
        let alpha_c = rho_c.map(|r| (1.0 + r).log2());
        // keep a1 + a2 inside the exact common rate
        let rc = (beta * alpha_c[0]).min(beta * alpha_c[1] + (1.0 - beta) * c22_coeff);
        let mut a = design.a.map(|x| x.max(0.0));
        let sum = a[0] + a[1];
        if sum > rc {
            let s = if sum > 0.0 { rc.max(0.0) / sum } else { 0.0 };
            a = a.map(|x| x * s);
        }
        let t = (beta * alpha[0] + a[0]).min(beta * alpha[1] + a[1]);
        Ok(Self { p: design.p, beta, a, t, alpha, alpha_c, rho, rho_c })
    }

    /// Violations of the iterate invariants, empty when all hold.
    pub fn invariant_violations(&self, ch: &ChannelSet, theta1: &CVec, pt: f64, zero_common: bool) -> Vec<String> {
        let mut v = Vec::new();
        let tol = 1e-6;
        for k in 0..2 {
            if self.alpha[k] > (1.0 + self.rho[k]).log2() + tol {
                v.push(format!("alpha[{k}] exceeds log2(1 + rho[{k}])"));
            }
            if !zero_common && self.alpha_c[k] > (1.0 + self.rho_c[k]).log2() + tol {
                v.push(format!("alpha_c[{k}] exceeds log2(1 + rho_c[{k}])"));
            }
        }
        match (user_powers(ch, theta1, &self.p, 1), user_powers(ch, theta1, &self.p, 2)) {
            (Ok(u1), Ok(u2)) => {
                let sinr = [u1.private_sinr(1), u2.private_sinr(2)];
                let csinr = [u1.common_sinr(), u2.common_sinr()];
                for k in 0..2 {
                    if self.rho[k] > sinr[k] * (1.0 + tol) + tol {
                        v.push(format!("rho[{k}] = {} above SINR {}", self.rho[k], sinr[k]));
                    }
                    if !zero_common && self.rho_c[k] > csinr[k] * (1.0 + tol) + tol {
                        v.push(format!("rho_c[{k}] = {} above SINR {}", self.rho_c[k], csinr[k]));
                    }
                }
            }
            (Err(e), _) | (_, Err(e)) => v.push(e.to_string()),
        }
        let power: f64 = self.p.iter().map(|z| z.norm_sqr()).sum();
        if power > pt * (1.0 + 1e-9) + 1e-300 {
            v.push(format!("tr(PP^H) = {power} exceeds Pt = {pt}"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            v.push(format!("beta = {} outside (0, 1]", self.beta));
        }
        if self.a.iter().any(|&x| x < 0.0) {
            v.push("negative common-rate share".into());
        }
        v
    }
}

use crate::channel::ChannelSet;

/// Gives any stream whose SINR is below `2 * SINR_FLOOR` a tiny matched
/// component, taking the power from the other streams when the budget is
/// exhausted.
fn lift_weak_streams(ch: &ChannelSet, theta1: &CVec, design: &mut TxDesign, hooks: BeamHooks) -> Result<()> {
    let geff = [effective_channel(1, ch, theta1)?, effective_channel(2, ch, theta1)?];
    for g in &geff {
        if norm_sqr(g) == 0.0 {
            return Err(Error::invalid("a user has an all-zero effective channel"));
        }
    }
    let weak = |d: &TxDesign| -> Result<Vec<usize>> {
        let u1 = user_powers(ch, theta1, &d.p, 1)?;
        let u2 = user_powers(ch, theta1, &d.p, 2)?;
        let mut w = Vec::new();
        if !hooks.zero_common && (u1.common_sinr() < 2.0 * SINR_FLOOR || u2.common_sinr() < 2.0 * SINR_FLOOR) {
            w.push(0);
        }
        if u1.private_sinr(1) < 2.0 * SINR_FLOOR {
            w.push(1);
        }
        if u2.private_sinr(2) < 2.0 * SINR_FLOOR {
            w.push(2);
        }
        Ok(w)
    };
    let mut eps = 1e-14;
    while !weak(design)?.is_empty() {
        if eps > 0.5 {
            return Err(Error::invalid("cannot give every stream a positive SINR"));
        }
        for i in weak(design)? {
            let dir = match i {
                0 => {
                    let (n1, n2) = (norm_sqr(&geff[0]), norm_sqr(&geff[1]));
                    let sum = &geff[0] / Complex64::new(n1.sqrt(), 0.0) + &geff[1] / Complex64::new(n2.sqrt(), 0.0);
                    if norm_sqr(&sum) > 0.0 { sum } else { geff[0].clone() }
                }
                k => geff[k - 1].clone(),
            };
            let dir = &dir / Complex64::new(norm_sqr(&dir).sqrt(), 0.0);
            let add = (eps * design.pt).sqrt();
            let headroom = design.pt - design.power();
            if headroom < add * add {
                let scale = (1.0 - eps).sqrt();
                design.p *= Complex64::new(scale, 0.0);
            }
            let mut col = design.p.column_mut(i);
            col += &dir * Complex64::new(add, 0.0);
        }
        eps *= 10.0;
    }
    let power = design.power();
    if power > design.pt {
        design.p *= Complex64::new((design.pt / power).sqrt(), 0.0);
    }
    Ok(())
}

/// Deterministic starting point: matched-filter private precoders sharing
/// `(1 - q) Pt`, a common precoder matched to the weaker user carrying
/// `q Pt` (`q = 0.5`, or 0 when the common stream is disabled), `beta = 0.5`
/// unless pinned, `a = (0, 0)` and exact slacks.
pub fn init_beam_iterate(
    ch: &ChannelSet,
    theta1: &CVec,
    pt: f64,
    c22_coeff: f64,
    hooks: BeamHooks,
) -> Result<BeamIterate> {
    let design = init_design(ch, theta1, pt, hooks)?;
    BeamIterate::from_design(ch, theta1, &design, c22_coeff, hooks)
}

pub fn init_design(ch: &ChannelSet, theta1: &CVec, pt: f64, hooks: BeamHooks) -> Result<TxDesign> {
    let nt = ch.nt();
    let geff = [effective_channel(1, ch, theta1)?, effective_channel(2, ch, theta1)?];
    let q = if hooks.zero_common { 0.0 } else { 0.5 };
    let unit = |g: &CVec| -> CVec {
        let n = norm_sqr(g).sqrt();
        if n > 0.0 { g / Complex64::new(n, 0.0) } else { CVec::from_element(nt, Complex64::new(1.0 / (nt as f64).sqrt(), 0.0)) }
    };
    let weaker = if norm_sqr(&geff[0]) <= norm_sqr(&geff[1]) { 0 } else { 1 };
    let mut p = DMatrix::zeros(nt, 3);
    p.set_column(0, &(unit(&geff[weaker]) * Complex64::new((q * pt).sqrt(), 0.0)));
    for k in 0..2 {
        let share = ((1.0 - q) / 2.0 * pt).sqrt();
        p.set_column(k + 1, &(unit(&geff[k]) * Complex64::new(share, 0.0)));
    }
    Ok(TxDesign { p, pr: 0.0, a: [0.0, 0.0], beta: hooks.fixed_beta.unwrap_or(0.5), pt })
}

#[derive(Debug, Clone, Copy)]
enum BetaTerm {
    Var(Var),
    Const(f64),
}

impl BetaTerm {
    fn affine(self) -> Affine {
        match self {
            BetaTerm::Var(v) => v.into(),
            BetaTerm::Const(b) => Affine::constant(b),
        }
    }
}

/// Variables of a built beamforming subproblem.
#[derive(Debug, Clone)]
pub struct BeamVars {
    /// `(re, im)` of normalized precoder entry `(antenna, stream)`; `None`
    /// when pinned to zero.
    pub p: Vec<[Option<(Var, Var)>; 3]>,
    pub beta: Option<Var>,
    pub a: Option<[Var; 2]>,
    pub t: Var,
    pub alpha: [Var; 2],
    pub rho: [Var; 2],
    pub alpha_c: Option<[Var; 2]>,
    pub rho_c: Option<[Var; 2]>,
}

/// A beamforming subproblem plus what is needed to read its solution back.
#[derive(Debug, Clone)]
pub struct BeamSubproblem {
    pub problem: ConicProblem,
    pub vars: BeamVars,
    hooks: BeamHooks,
    /// `sqrt(Pt)`, the precoder normalization (1 when `Pt = 0`).
    scale: f64,
}

/// `Phi(beta, alpha) >= rhs`, convex in all variables.
fn add_phi_ge(
    prob: &mut ConicProblem,
    beta: BetaTerm,
    alpha: Var,
    beta_ref: f64,
    alpha_ref: f64,
    rhs: Affine,
    label: &str,
) -> Result<()> {
    match beta {
        BetaTerm::Const(b) => {
            prob.add_ge(Affine::term(alpha, b), rhs, label)?;
        }
        BetaTerm::Var(bv) => {
            let s = beta_ref + alpha_ref;
            let bound = (Affine::from(bv) + Affine::from(alpha)) * (0.5 * s) - 0.25 * s * s - rhs;
            let diff = (Affine::from(bv) - Affine::from(alpha)) * 0.5;
            prob.add_quadratic_upper_bound(vec![diff], bound, label)?;
        }
    }
    Ok(())
}

/// `||interference||^2 + 1 <= 2 Re{c^* z} / r - |c|^2 rho / r^2`, multiplied
/// through by `r` so the coefficients stay O(1) when the SINR is small.
/// Returns the scaled rows and the bound for a quadratic upper bound.
fn linearized_sinr(rows: Vec<Affine>, z: ComplexAffine, c: Complex64, rho: Var, r: f64) -> (Vec<Affine>, Affine) {
    let s = r.sqrt();
    let rows = rows.into_iter().map(|e| e * s).collect();
    let bound = z.real_inner(c) * 2.0 - Affine::term(rho, c.norm_sqr() / r) - r;
    (rows, bound)
}

/// Builds the convex approximation around `iterate`.
///
/// `c22_coeff` is the slot-2 spectral efficiency (the slot-2 rate before the
/// `1 - beta` factor), fixed by the slot-2 phases and relay power.
pub fn build_beam_subproblem(
    ch: &ChannelSet,
    theta1: &CVec,
    c22_coeff: f64,
    iterate: &BeamIterate,
    pt: f64,
    hooks: BeamHooks,
) -> Result<BeamSubproblem> {
    let nt = ch.nt();
    if iterate.p.nrows() != nt || iterate.p.ncols() != 3 {
        return Err(Error::invalid("iterate precoder has the wrong shape"));
    }
    if !(pt >= 0.0 && pt.is_finite()) {
        return Err(Error::invalid(format!("power budget must be nonnegative, got {pt}")));
    }
    if !(c22_coeff >= 0.0 && c22_coeff.is_finite()) {
        return Err(Error::invalid("slot-2 coefficient must be finite and nonnegative"));
    }
    let zero_power = pt == 0.0;
    if !zero_power {
        let refs = iterate.rho.iter().chain(if hooks.zero_common { [].iter() } else { iterate.rho_c.iter() });
        for &r in refs {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("reference SINR slack must be positive, got {r}")));
            }
        }
    }
    let sigma = ch.noise_power.sqrt();
    let scale = if zero_power { 1.0 } else { pt.sqrt() };
    let hbar = [
        effective_channel(1, ch, theta1)? * Complex64::new(scale / sigma, 0.0),
        effective_channel(2, ch, theta1)? * Complex64::new(scale / sigma, 0.0),
    ];
    let pref = &iterate.p / Complex64::new(scale, 0.0);

    let mut prob = ConicProblem::new();
    let mut pvars = Vec::with_capacity(nt);
    for j in 0..nt {
        let mut row = [None; 3];
        for (i, slot) in row.iter_mut().enumerate() {
            if i == 0 && hooks.zero_common {
                continue;
            }
            let re = prob.add_var(format!("p{i}_{j}_re"));
            let im = prob.add_var(format!("p{i}_{j}_im"));
            *slot = Some((re, im));
        }
        pvars.push(row);
    }
    let beta = match hooks.fixed_beta {
        Some(b) => BetaTerm::Const(b),
        None => BetaTerm::Var(prob.add_var("beta")),
    };
    let a = if hooks.zero_common { None } else { Some([prob.add_var("a1"), prob.add_var("a2")]) };
    let t = prob.add_var("t");
    let alpha = [prob.add_var("alpha1"), prob.add_var("alpha2")];
    let rho = [prob.add_var("rho1"), prob.add_var("rho2")];
    let (alpha_c, rho_c) = if hooks.zero_common {
        (None, None)
    } else {
        (
            Some([prob.add_var("alpha_c1"), prob.add_var("alpha_c2")]),
            Some([prob.add_var("rho_c1"), prob.add_var("rho_c2")]),
        )
    };

    // z[k][i] = hbar_k^H p_i
    let z = |k: usize, i: usize| -> ComplexAffine {
        let mut e = ComplexAffine::default();
        for j in 0..nt {
            if let Some((re, im)) = pvars[j][i] {
                e.add_scaled(hbar[k][j].conj(), re, im);
            }
        }
        e
    };
    let zref = |k: usize, i: usize| -> Complex64 { hdot(&hbar[k], &pref.column(i).into_owned()) };
    let a_aff = |k: usize| -> Affine { a.map(|a| Affine::from(a[k])).unwrap_or_default() };
    let a_sum = || -> Affine { a.map(|a| Affine::from(a[0]) + Affine::from(a[1])).unwrap_or_default() };

    // rate coupling: Phi(beta, alpha_k) + a_k >= t
    for k in 0..2 {
        add_phi_ge(
            &mut prob,
            beta,
            alpha[k],
            iterate.beta,
            iterate.alpha[k],
            Affine::from(t) - a_aff(k),
            &format!("rate_u{}", k + 1),
        )?;
    }
    if let (Some(alpha_c), Some(rho_c)) = (alpha_c, rho_c) {
        add_phi_ge(&mut prob, beta, alpha_c[0], iterate.beta, iterate.alpha_c[0], a_sum(), "common_u1")?;
        // Phi(beta, alpha_c2) + (1 - beta) c22 >= a1 + a2
        let slot2 = (Affine::constant(1.0) - beta.affine()) * c22_coeff;
        add_phi_ge(&mut prob, beta, alpha_c[1], iterate.beta, iterate.alpha_c[1], a_sum() - slot2, "common_u2")?;
        for k in 0..2 {
            prob.add_exp_rate_constraint(alpha_c[k], rho_c[k], format!("exp_common_u{}", k + 1))?;
        }
        for k in 0..2 {
            let label = format!("sinr_common_u{}", k + 1);
            if zero_power {
                prob.add_eq(rho_c[k].into(), label)?;
                continue;
            }
            let (c, r) = (zref(k, 0), iterate.rho_c[k]);
            let mut rows = Vec::new();
            for i in 1..3 {
                rows.extend(z(k, i).rows());
            }
            let (rows, bound) = linearized_sinr(rows, z(k, 0), c, rho_c[k], r);
            prob.add_quadratic_upper_bound(rows, bound, label)?;
            prob.add_ge(rho_c[k].into(), Affine::constant(SINR_FLOOR), format!("floor_common_u{}", k + 1))?;
        }
        for (k, av) in [a.unwrap()[0], a.unwrap()[1]].into_iter().enumerate() {
            prob.add_nonneg(av.into(), format!("a{}>=0", k + 1))?;
        }
        for k in 0..2 {
            prob.add_nonneg(alpha_c[k].into(), format!("alpha_c{}>=0", k + 1))?;
        }
    }
    for k in 0..2 {
        prob.add_exp_rate_constraint(alpha[k], rho[k], format!("exp_private_u{}", k + 1))?;
        prob.add_nonneg(alpha[k].into(), format!("alpha{}>=0", k + 1))?;
        let label = format!("sinr_private_u{}", k + 1);
        if zero_power {
            prob.add_eq(rho[k].into(), label)?;
            continue;
        }
        let other = 2 - k; // stream index of the other private stream
        let own = k + 1;
        let (c, r) = (zref(k, own), iterate.rho[k]);
        let (rows, bound) = linearized_sinr(z(k, other).rows().to_vec(), z(k, own), c, rho[k], r);
        prob.add_quadratic_upper_bound(rows, bound, label)?;
        prob.add_ge(rho[k].into(), Affine::constant(SINR_FLOOR), format!("floor_private_u{}", k + 1))?;
    }

    // tr(PP^H) <= Pt, normalized
    let mut entries = Vec::new();
    for row in &pvars {
        for (re, im) in row.iter().flatten() {
            entries.push(Affine::from(*re));
            entries.push(Affine::from(*im));
        }
    }
    let budget = if zero_power { 0.0 } else { 1.0 };
    prob.add_norm_bound(entries, Affine::constant(budget), "power")?;

    if let BetaTerm::Var(bv) = beta {
        prob.add_ge(bv.into(), Affine::constant(BETA_MIN), "beta>=beta_min")?;
        prob.add_ge(Affine::constant(1.0), bv.into(), "beta<=1")?;
    }
    prob.set_objective(t.into())?;

    Ok(BeamSubproblem {
        problem: prob,
        vars: BeamVars {
            p: pvars,
            beta: match beta {
                BetaTerm::Var(v) => Some(v),
                BetaTerm::Const(_) => None,
            },
            a,
            t,
            alpha,
            rho,
            alpha_c,
            rho_c,
        },
        hooks,
        scale,
    })
}

impl BeamSubproblem {
    /// Reads an iterate out of a primal point of this subproblem.
    pub fn extract(&self, x: &[f64]) -> BeamIterate {
        let v = &self.vars;
        let nt = v.p.len();
        let p = DMatrix::from_fn(nt, 3, |j, i| match v.p[j][i] {
            Some((re, im)) => Complex64::new(x[re.index()], x[im.index()]) * self.scale,
            None => Complex64::new(0.0, 0.0),
        });
        let beta = match (v.beta, self.hooks.fixed_beta) {
            (Some(b), _) => x[b.index()].clamp(BETA_MIN, 1.0),
            (None, Some(b)) => b,
            (None, None) => unreachable!(),
        };
        let get2 = |vs: Option<[Var; 2]>| vs.map(|a| [x[a[0].index()], x[a[1].index()]]).unwrap_or([0.0, 0.0]);
        BeamIterate {
            p,
            beta,
            a: get2(v.a).map(|a| a.max(0.0)),
            t: x[v.t.index()],
            alpha: get2(Some(v.alpha)),
            alpha_c: get2(v.alpha_c),
            rho: get2(Some(v.rho)),
            rho_c: get2(v.rho_c),
        }
    }

    /// The point of this subproblem's variable space corresponding to `it`.
    pub fn point_of(&self, it: &BeamIterate) -> Vec<f64> {
        let v = &self.vars;
        let mut x = vec![0.0; self.problem.num_vars()];
        for (j, row) in v.p.iter().enumerate() {
            for (i, slot) in row.iter().enumerate() {
                if let Some((re, im)) = slot {
                    let z = it.p[(j, i)] / self.scale;
                    x[re.index()] = z.re;
                    x[im.index()] = z.im;
                }
            }
        }
        if let Some(b) = v.beta {
            x[b.index()] = it.beta;
        }
        let mut put2 = |vs: Option<[Var; 2]>, vals: [f64; 2]| {
            if let Some(a) = vs {
                x[a[0].index()] = vals[0];
                x[a[1].index()] = vals[1];
            }
        };
        put2(v.a, it.a);
        put2(Some(v.alpha), it.alpha);
        put2(Some(v.rho), it.rho);
        put2(v.alpha_c, it.alpha_c);
        put2(v.rho_c, it.rho_c);
        x[v.t.index()] = it.t;
        x
    }
}

/// Settings of one beamforming SCA run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamOptions {
    pub pt: f64,
    pub pr: f64,
    pub sca_tol: f64,
    pub max_iters: usize,
    pub solver_tol: f64,
    pub hooks: BeamHooks,
}

#[derive(Debug, Clone)]
pub struct BeamOutcome {
    /// Final iterate with exact slacks at the finished design.
    pub iterate: BeamIterate,
    /// Finished design: beta clamped, power within budget, `a` re-allocated
    /// in closed form for the final rates.
    pub design: TxDesign,
    pub report: RateReport,
    /// Objective of the starting point followed by each accepted round.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Stopped because a round would have lowered the objective.
    pub stalled: bool,
}

/// Inner solver failure; carries the best iterate reached so far.
#[derive(Debug, Clone)]
pub struct BeamFailure {
    pub status: SolveStatus,
    pub iteration: usize,
    pub incumbent: BeamOutcome,
}

impl From<BeamFailure> for Error {
    fn from(f: BeamFailure) -> Self {
        Error::Solver { status: f.status, iteration: f.iteration }
    }
}

/// Turns a solver iterate into a design that is exactly feasible: beta
/// clamped, P scaled into the budget, and `a` replaced by the closed-form
/// max-min allocation of the exact common rate.
pub fn finish_design(ch: &ChannelSet, phases: &PhaseConfig, mut design: TxDesign, hooks: BeamHooks) -> TxDesign {
    design.beta = match hooks.fixed_beta {
        Some(b) => b,
        None => design.beta.clamp(BETA_MIN, 1.0),
    };
    if hooks.zero_common {
        design.p.column_mut(0).fill(Complex64::new(0.0, 0.0));
    }
    let power = design.power();
    if power > design.pt {
        design.p *= Complex64::new((design.pt / power).sqrt(), 0.0);
    }
    if hooks.zero_common {
        design.a = [0.0, 0.0];
        return design;
    }
    design.a = [0.0, 0.0];
    let r = evaluate_design(ch, phases, &design);
    if let Ok((a1, a2, _)) = allocate_common_rate(r.r1_1, r.r2_1, r.rc.max(0.0)) {
        design.a = [a1, a2];
        // guard the last ulp against the feasibility check
        let sum = a1 + a2;
        if sum > r.rc {
            design.a = design.a.map(|x| x * r.rc / sum);
        }
    }
    design
}

/// Projects a solver point onto an exactly feasible design and rebuilds the
/// iterate around it with exact slacks.
fn restore(
    ch: &ChannelSet,
    phases: &PhaseConfig,
    it: &BeamIterate,
    opts: &BeamOptions,
    c22: f64,
) -> Result<(BeamIterate, TxDesign, RateReport)> {
    let mut design = finish_design(ch, phases, it.design(opts.pt, opts.pr), opts.hooks);
    if opts.pt == 0.0 {
        let report = evaluate_design(ch, phases, &design);
        return Ok((BeamIterate { t: report.min_rate, a: design.a, ..it.clone() }, design, report));
    }
    // from_design may lift a starved stream; carry its P and a back
    let next = BeamIterate::from_design(ch, &phases.theta1, &design, c22, opts.hooks)?;
    design.p = next.p.clone();
    design.a = next.a;
    let report = evaluate_design(ch, phases, &design);
    Ok((next, design, report))
}

/// Runs the beamforming SCA from `init` until the objective changes by less
/// than `sca_tol` or `max_iters` rounds have been solved.
///
/// Every accepted round is projected onto an exactly feasible design, and
/// the trace records the exact max-min rate of those designs. A round solved
/// only to reduced accuracy is accepted when its projected design does not
/// lower the objective; otherwise the run fails and returns the incumbent.
pub fn run_algorithm1(
    ch: &ChannelSet,
    phases: &PhaseConfig,
    init: BeamIterate,
    opts: &BeamOptions,
) -> std::result::Result<BeamOutcome, BeamFailure> {
    let c22 = slot2_spectral_efficiency(ch, &phases.theta2, opts.pr).unwrap_or(0.0);
    let raw_outcome = |it: &BeamIterate, trace: Vec<f64>, iterations| {
        let design = it.design(opts.pt, opts.pr);
        BeamOutcome {
            iterate: it.clone(),
            report: evaluate_design(ch, phases, &design),
            design,
            trace,
            iterations,
            stalled: false,
        }
    };
    let (mut current, mut design, mut report) = match restore(ch, phases, &init, opts, c22) {
        Ok(r) => r,
        Err(_) => {
            return Err(BeamFailure {
                status: SolveStatus::NumericalFailure,
                iteration: 0,
                incumbent: raw_outcome(&init, vec![init.t], 0),
            })
        }
    };
    let mut trace = vec![current.t];
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < opts.max_iters {
        let incumbent = |trace: &Vec<f64>, iterations| BeamOutcome {
            iterate: current.clone(),
            design: design.clone(),
            report: report.clone(),
            trace: trace.clone(),
            iterations,
            stalled: false,
        };
        let sub = match build_beam_subproblem(ch, &phases.theta1, c22, &current, opts.pt, opts.hooks) {
            Ok(s) => s,
            Err(_) => {
                return Err(BeamFailure {
                    status: SolveStatus::NumericalFailure,
                    iteration: iterations + 1,
                    incumbent: incumbent(&trace, iterations),
                })
            }
        };
        let res = sub.problem.solve(opts.solver_tol);
        let finite = res.x.iter().all(|v| v.is_finite());
        let candidate = if finite { restore(ch, phases, &sub.extract(&res.x), opts, c22).ok() } else { None };
        let prev_t = current.t;
        match candidate {
            Some((it, d, r)) if r.feasible && it.t >= prev_t - MONOTONE_SLACK => {
                iterations += 1;
                current = it;
                design = d;
                report = r;
                trace.push(current.t);
            }
            Some(_) if res.is_optimal() => {
                stalled = true;
                break;
            }
            _ => {
                return Err(BeamFailure {
                    status: if res.is_optimal() { SolveStatus::NumericalFailure } else { res.status },
                    iteration: iterations + 1,
                    incumbent: incumbent(&trace, iterations),
                })
            }
        }
        if (current.t - prev_t).abs() < opts.sca_tol {
            break;
        }
    }
    Ok(BeamOutcome { iterate: current, design, report, trace, iterations, stalled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_channel_set;
    use crate::config::ScenarioConfig;
    use crate::rng::phase_rng;

    #[test]
    fn phi_examples() {
        assert_eq!(phi_lower_bound(0.5, 2.0, 0.5, 2.0), 1.0);
        assert!((phi_lower_bound(1.0, 1.0, 0.5, 2.0) - 0.9375).abs() < 1e-15);
    }

    fn setup(seed: u64, n: usize) -> (ChannelSet, PhaseConfig, ScenarioConfig) {
        let cfg = ScenarioConfig { n_ris: n, ..Default::default() };
        let ch = build_channel_set(&cfg, seed).unwrap();
        let ph = PhaseConfig::random_slot1(&ch, &mut phase_rng(seed, 0));
        (ch, ph, cfg)
    }

    #[test]
    fn init_is_feasible_and_uses_full_power() {
        for seed in 0..5 {
            let (ch, ph, cfg) = setup(seed, 4);
            let pt = cfg.pt_watts();
            let c22 = slot2_spectral_efficiency(&ch, &ph.theta2, cfg.pr_watts()).unwrap();
            let it = init_beam_iterate(&ch, &ph.theta1, pt, c22, BeamHooks::default()).unwrap();
            assert!(it.invariant_violations(&ch, &ph.theta1, pt, false).is_empty());
            let power: f64 = it.p.iter().map(|z| z.norm_sqr()).sum();
            assert!((power - pt).abs() <= 1e-9 * pt);
            assert_eq!(it.a, [0.0, 0.0]);
            assert_eq!(it.beta, 0.5);
            let rep = evaluate_design(&ch, &ph, &it.design(pt, cfg.pr_watts()));
            assert!(rep.feasible, "{:?}", rep.violations);
        }
    }

    #[test]
    fn own_point_is_feasible_for_subproblem() {
        let (ch, ph, cfg) = setup(3, 4);
        let pt = cfg.pt_watts();
        let c22 = slot2_spectral_efficiency(&ch, &ph.theta2, cfg.pr_watts()).unwrap();
        for hooks in [
            BeamHooks::default(),
            BeamHooks { fixed_beta: Some(1.0), zero_common: false },
            BeamHooks { fixed_beta: Some(1.0), zero_common: true },
        ] {
            let it = init_beam_iterate(&ch, &ph.theta1, pt, c22, hooks).unwrap();
            let sub = build_beam_subproblem(&ch, &ph.theta1, c22, &it, pt, hooks).unwrap();
            let x = sub.point_of(&it);
            let bad = sub.problem.violated(&x, 1e-9);
            assert!(bad.is_empty(), "{hooks:?}: {bad:?}");
        }
    }

    #[test]
    fn nonpositive_reference_sinr_is_rejected() {
        let (ch, ph, cfg) = setup(3, 2);
        let pt = cfg.pt_watts();
        let mut it = init_beam_iterate(&ch, &ph.theta1, pt, 1.0, BeamHooks::default()).unwrap();
        it.rho[1] = 0.0;
        assert!(matches!(
            build_beam_subproblem(&ch, &ph.theta1, 1.0, &it, pt, BeamHooks::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_power_forces_zero_rate() {
        let (ch, ph, _) = setup(4, 2);
        let it = BeamIterate {
            p: DMatrix::zeros(2, 3),
            beta: 0.5,
            a: [0.0, 0.0],
            t: 0.0,
            alpha: [0.0; 2],
            alpha_c: [0.0; 2],
            rho: [0.0; 2],
            rho_c: [0.0; 2],
        };
        let sub = build_beam_subproblem(&ch, &ph.theta1, 2.0, &it, 0.0, BeamHooks::default()).unwrap();
        let r = sub.problem.solve(1e-8);
        assert!(r.is_optimal(), "{:?}", r.status);
        let out = sub.extract(&r.x);
        assert!(out.t.abs() < 1e-6, "{}", out.t);
        assert!(out.p.iter().all(|z| z.norm() < 1e-6));
    }

    #[test]
    fn algorithm1_trace_is_monotone_and_feasible() {
        let (ch, ph, cfg) = setup(11, 4);
        let pt = cfg.pt_watts();
        let c22 = slot2_spectral_efficiency(&ch, &ph.theta2, cfg.pr_watts()).unwrap();
        let init = init_beam_iterate(&ch, &ph.theta1, pt, c22, BeamHooks::default()).unwrap();
        let opts = BeamOptions {
            pt,
            pr: cfg.pr_watts(),
            sca_tol: 1e-3,
            max_iters: 200,
            solver_tol: 1e-8,
            hooks: BeamHooks::default(),
        };
        let out = run_algorithm1(&ch, &ph, init, &opts).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1] >= w[0] - MONOTONE_SLACK, "{:?}", out.trace);
        }
        assert!(out.report.feasible, "{:?}", out.report.violations);
        assert!((out.report.min_rate - out.trace.last().unwrap()).abs() < 1e-9);
        assert!(out.iterations <= 200);
    }

    /// With one antenna and no common stream the surrogate is
    /// `x_k >= (r_k + |c_k|^2 g / r_k + r_k |h_k|^2 x_j^2) / (2 |c_k| |h_k|)`
    /// for `g = 2^t - 1`, `x1^2 + x2^2 <= 1`. Its least fixed point decides
    /// feasibility exactly, so bisection on `t` gives the optimum.
    #[test]
    fn single_antenna_subproblem_matches_bisection() {
        for seed in 0..6 {
            let cfg = ScenarioConfig { nt: 1, n_ris: 0, ..Default::default() };
            let ch = build_channel_set(&cfg, seed).unwrap();
            let theta1 = CVec::zeros(0);
            let pt = cfg.pt_watts();
            let hooks = BeamHooks { fixed_beta: Some(1.0), zero_common: true };
            let it = init_beam_iterate(&ch, &theta1, pt, 0.0, hooks).unwrap();
            let sub = build_beam_subproblem(&ch, &theta1, 0.0, &it, pt, hooks).unwrap();
            let res = sub.problem.solve(1e-10);
            assert!(res.is_optimal());
            let t_solver = res.value(sub.vars.t);

            let sigma = ch.noise_power.sqrt();
            let h = [ch.g1[0].norm() * pt.sqrt() / sigma, ch.g2[0].norm() * pt.sqrt() / sigma];
            let c = [h[0] * it.p[(0, 1)].norm() / pt.sqrt(), h[1] * it.p[(0, 2)].norm() / pt.sqrt()];
            let r = it.rho;
            let feasible = |t: f64| {
                let g = 2f64.powf(t) - 1.0;
                let f = |k: usize, xj: f64| (r[k] + c[k] * c[k] * g / r[k] + r[k] * h[k] * h[k] * xj * xj) / (2.0 * c[k] * h[k]);
                let (mut x1, mut x2) = (0.0f64, 0.0f64);
                for _ in 0..100_000 {
                    let (n1, n2) = (f(0, x2), f(1, x1));
                    if n1 * n1 + n2 * n2 > 1.0 {
                        return false;
                    }
                    if (n1 - x1).abs() + (n2 - x2).abs() < 1e-15 {
                        return true;
                    }
                    (x1, x2) = (n1, n2);
                }
                true
            };
            let (mut lo, mut hi) = (0.0, 40.0);
            assert!(feasible(lo));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) { lo = mid } else { hi = mid }
            }
            assert!((t_solver - lo).abs() < 1e-6, "seed {seed}: solver {t_solver} bisection {lo}");
        }
    }
}
