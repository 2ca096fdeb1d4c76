//! A small conic-program builder.
//!
//! Problems are `maximize c^T x + c0` subject to affine images of `x` lying
//! in products of zero, nonnegative, second-order, rotated second-order and
//! exponential cones. Everything is real; complex expressions go through
//! [`ComplexAffine`]. Solving is delegated to a [`ConicBackend`]; the default
//! is [`ClarabelBackend`].

mod affine;
mod clarabel_backend;
mod complex;
mod dump;

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use affine::{Affine, Var};
pub use clarabel_backend::ClarabelBackend;
pub use complex::ComplexAffine;

use crate::{Error, Result};

/// Default accuracy of inner solves.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeKind {
    /// Every row equals zero.
    Zero,
    /// Every row is nonnegative.
    NonNegative,
    /// `(t, x)` with `||x|| <= t`.
    SecondOrder,
    /// `(u, v, w)` with `2 u v >= ||w||^2`, `u, v >= 0`.
    RotatedSecondOrder,
    /// `(x, y, z)` with `y exp(x / y) <= z`, `y > 0` (closure).
    Exponential,
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConeKind::Zero => "zero",
            ConeKind::NonNegative => "nonneg",
            ConeKind::SecondOrder => "soc",
            ConeKind::RotatedSecondOrder => "rsoc",
            ConeKind::Exponential => "exp",
        };
        f.write_str(s)
    }
}

impl ConeKind {
    /// Distance-like violation of `values` from the cone; 0 when inside.
    pub fn violation(&self, v: &[f64]) -> f64 {
        match self {
            ConeKind::Zero => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
            ConeKind::NonNegative => v.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max),
            ConeKind::SecondOrder => soc_violation(v[0], &v[1..]),
            ConeKind::RotatedSecondOrder => {
                let (u, w) = (v[0], v[1]);
                let mut rest = vec![(u - w) / 2f64.sqrt()];
                rest.extend_from_slice(&v[2..]);
                soc_violation((u + w) / 2f64.sqrt(), &rest)
            }
            ConeKind::Exponential => {
                let (x, y, z) = (v[0], v[1], v[2]);
                if y > 0.0 {
                    let lhs = y * (x / y).exp();
                    (lhs - z).clamp(0.0, f64::MAX)
                } else {
                    // closure at y = 0: x <= 0, z >= 0
                    (-y).max(x.max(0.0)).max((-z).max(0.0))
                }
            }
        }
    }
}

fn soc_violation(t: f64, x: &[f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    (n - t).max(0.0)
}

/// One cone-membership constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeConstraint {
    pub kind: ConeKind,
    pub rows: Vec<Affine>,
    pub label: String,
}

impl ConeConstraint {
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.kind.violation(&self.values(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintHandle(pub usize);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    var_names: Vec<String>,
    objective: Affine,
    constraints: Vec<ConeConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal point; meaningful when `status` is `Optimal`, kept otherwise
    /// for diagnostics.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: u32,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: Var) -> f64 {
        self.x[v.index()]
    }
}

/// A conic solver.
pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &ConicProblem, tol: f64) -> SolveResult;
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Var {
        self.var_names.push(name.into());
        Var::new(self.var_names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.var_names[v.index()]
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// Sets the expression to maximize.
    pub fn set_objective(&mut self, objective: Affine) -> Result<()> {
        self.check_affine(&objective)?;
        self.objective = objective;
        Ok(())
    }

    pub fn objective(&self) -> &Affine {
        &self.objective
    }

    pub fn constraints(&self) -> &[ConeConstraint] {
        &self.constraints
    }

    pub fn constraint(&self, h: ConstraintHandle) -> &ConeConstraint {
        &self.constraints[h.0]
    }

    fn check_affine(&self, a: &Affine) -> Result<()> {
        if let Some((v, _)) = a.terms().iter().find(|(v, _)| v.index() >= self.num_vars()) {
            return Err(Error::invalid(format!(
                "expression references undeclared variable #{}",
                v.index()
            )));
        }
        if !a.is_finite() {
            return Err(Error::invalid("expression has non-finite coefficients"));
        }
        Ok(())
    }

    pub fn add_cone(
        &mut self,
        kind: ConeKind,
        rows: Vec<Affine>,
        label: impl Into<String>,
    ) -> Result<ConstraintHandle> {
        for r in &rows {
            self.check_affine(r)?;
        }
        let ok = match kind {
            ConeKind::Zero | ConeKind::NonNegative => !rows.is_empty(),
            ConeKind::SecondOrder => rows.len() >= 2,
            ConeKind::RotatedSecondOrder => rows.len() >= 3,
            ConeKind::Exponential => rows.len() == 3,
        };
        if !ok {
            return Err(Error::invalid(format!("{kind} cone cannot have {} rows", rows.len())));
        }
        self.constraints.push(ConeConstraint { kind, rows, label: label.into() });
        Ok(ConstraintHandle(self.constraints.len() - 1))
    }

    /// `expr == 0`.
    pub fn add_eq(&mut self, expr: Affine, label: impl Into<String>) -> Result<ConstraintHandle> {
        self.add_cone(ConeKind::Zero, vec![expr], label)
    }

    /// `expr >= 0`.
    pub fn add_nonneg(&mut self, expr: Affine, label: impl Into<String>) -> Result<ConstraintHandle> {
        self.add_cone(ConeKind::NonNegative, vec![expr], label)
    }

    /// `lhs >= rhs`.
    pub fn add_ge(&mut self, lhs: Affine, rhs: Affine, label: impl Into<String>) -> Result<ConstraintHandle> {
        self.add_nonneg(lhs - rhs, label)
    }

    /// `||rows|| <= bound`.
    pub fn add_norm_bound(
        &mut self,
        rows: Vec<Affine>,
        bound: Affine,
        label: impl Into<String>,
    ) -> Result<ConstraintHandle> {
        let mut all = Vec::with_capacity(rows.len() + 1);
        all.push(bound);
        all.extend(rows);
        if all.len() == 1 {
            return self.add_nonneg(all.pop().unwrap(), label);
        }
        self.add_cone(ConeKind::SecondOrder, all, label)
    }

    /// `||rows||^2 <= bound`, as the rotated cone `(bound, 1/2, rows)`.
    /// With no rows this is `bound >= 0`.
    pub fn add_quadratic_upper_bound(
        &mut self,
        rows: Vec<Affine>,
        bound: Affine,
        label: impl Into<String>,
    ) -> Result<ConstraintHandle> {
        if rows.is_empty() {
            return self.add_nonneg(bound, label);
        }
        let mut all = Vec::with_capacity(rows.len() + 2);
        all.push(bound);
        all.push(Affine::constant(0.5));
        all.extend(rows);
        self.add_cone(ConeKind::RotatedSecondOrder, all, label)
    }

    /// `2^alpha <= 1 + rho`, i.e. `(alpha ln 2, 1, 1 + rho)` in the exponential cone.
    pub fn add_exp_rate_constraint(
        &mut self,
        alpha: Var,
        rho: Var,
        label: impl Into<String>,
    ) -> Result<ConstraintHandle> {
        self.add_cone(
            ConeKind::Exponential,
            vec![
                Affine::term(alpha, LN_2),
                Affine::constant(1.0),
                Affine::term(rho, 1.0) + 1.0,
            ],
            label,
        )
    }

    /// Largest cone violation at `x`; infinite if `x` has a non-finite entry.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max)
    }

    /// Constraints violated by more than `tol` at `x`, with their violation.
    pub fn violated(&self, x: &[f64], tol: f64) -> Vec<(usize, f64)> {
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.violation(x)))
            .filter(|(_, v)| *v > tol)
            .collect()
    }

    pub fn solve(&self, tol: f64) -> SolveResult {
        ClarabelBackend::default().solve(self, tol)
    }

    pub fn solve_with(&self, backend: &dyn ConicBackend, tol: f64) -> SolveResult {
        backend.solve(self, tol)
    }

    /// Plain-text listing of variables, objective and cone blocks.
    pub fn dump(&self) -> String {
        dump::render(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-8;

    #[test]
    fn linear_program() {
        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        p.add_ge(Affine::constant(3.0), x.into(), "x<=3").unwrap();
        p.set_objective(x.into()).unwrap();
        let r = p.solve(TOL);
        assert!(r.is_optimal());
        assert!((r.value(x) - 3.0).abs() < 1e-7);
        assert!((r.objective_value - 3.0).abs() < 1e-7);
    }

    #[test]
    fn exp_cone_log_identity() {
        let mut p = ConicProblem::new();
        let t = p.add_var("t");
        let rho = p.add_var("rho");
        p.add_eq(Affine::from(rho) - 3.0, "rho=3").unwrap();
        p.add_exp_rate_constraint(t, rho, "2^t<=1+rho").unwrap();
        p.set_objective(t.into()).unwrap();
        let r = p.solve(TOL);
        assert!(r.is_optimal());
        assert!((r.value(t) - 2.0).abs() < 1e-7, "{}", r.value(t));
    }

    #[test]
    fn exp_rate_membership() {
        let mut p = ConicProblem::new();
        let a = p.add_var("alpha");
        let r = p.add_var("rho");
        let h = p.add_exp_rate_constraint(a, r, "").unwrap();
        let c = p.constraint(h);
        assert!(c.violation(&[1.0, 1.0]) < 1e-12);
        assert!(c.violation(&[0.0, 0.0]) < 1e-12);
        assert!(c.violation(&[2.0, 1.0]) > 1.0);
    }

    #[test]
    fn undeclared_variable_is_rejected() {
        let mut p = ConicProblem::new();
        let mut q = ConicProblem::new();
        let _ = q.add_var("a");
        let foreign = q.add_var("b");
        assert!(matches!(
            p.add_nonneg(foreign.into(), ""),
            Err(Error::InvalidArgument(_))
        ));
        let a = p.add_var("a");
        assert!(p.add_exp_rate_constraint(a, foreign, "").is_err());
    }

    #[test]
    fn malformed_cones_are_rejected() {
        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        assert!(p.add_cone(ConeKind::SecondOrder, vec![x.into()], "").is_err());
        assert!(p.add_cone(ConeKind::Exponential, vec![x.into(), x.into()], "").is_err());
        assert!(p.add_cone(ConeKind::NonNegative, vec![], "").is_err());
        assert!(p.add_nonneg(Affine::term(x, f64::NAN), "").is_err());
    }

    #[test]
    fn quadratic_bound_one_dimensional() {
        for (obj, expect) in [(1.0, 2.0), (-1.0, 2.0)] {
            let mut p = ConicProblem::new();
            let x = p.add_var("x");
            p.add_quadratic_upper_bound(vec![x.into()], Affine::constant(4.0), "x^2<=4").unwrap();
            p.set_objective(Affine::term(x, obj)).unwrap();
            let r = p.solve(TOL);
            assert!(r.is_optimal());
            assert!((r.value(x) * obj - expect).abs() < 1e-6);
        }
        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        let h = p.add_quadratic_upper_bound(vec![x.into()], Affine::constant(4.0), "").unwrap();
        assert!(p.constraint(h).violation(&[1.9]) == 0.0);
        assert!(p.constraint(h).violation(&[2.1]) > 0.0);
    }

    #[test]
    fn quadratic_bound_degenerate_and_tight() {
        let mut p = ConicProblem::new();
        let b = p.add_var("b");
        let h = p.add_quadratic_upper_bound(vec![], b.into(), "").unwrap();
        assert_eq!(p.constraint(h).kind, ConeKind::NonNegative);

        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        let h = p
            .add_quadratic_upper_bound(vec![x.into(), y.into()], Affine::constant(2.0), "")
            .unwrap();
        assert!(p.constraint(h).violation(&[1.0, 1.0]) < 1e-12);
        assert!(p.constraint(h).violation(&[1.0, 1.01]) > 0.0);
    }

    #[test]
    fn disk_maximization() {
        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        p.add_quadratic_upper_bound(vec![x.into(), y.into()], Affine::constant(2.0), "")
            .unwrap();
        p.set_objective(Affine::from(x) + Affine::from(y)).unwrap();
        let r = p.solve(TOL);
        assert!(r.is_optimal());
        assert!((r.value(x) - 1.0).abs() < 1e-6);
        assert!((r.value(y) - 1.0).abs() < 1e-6);
        assert!((r.objective_value - 2.0).abs() < 1e-7);
        let again = p.solve(TOL);
        assert!((again.objective_value - r.objective_value).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        p.add_nonneg(Affine::from(x) - 2.0, "x>=2").unwrap();
        p.add_nonneg(Affine::constant(1.0) - Affine::from(x), "x<=1").unwrap();
        p.set_objective(x.into()).unwrap();
        assert_eq!(p.solve(TOL).status, SolveStatus::Infeasible);

        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        p.add_nonneg(x.into(), "x>=0").unwrap();
        p.set_objective(x.into()).unwrap();
        assert_eq!(p.solve(TOL).status, SolveStatus::Unbounded);
    }

    #[test]
    fn builder_audit_reports_what_was_added() {
        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        let rows = vec![Affine::term(x, 2.0) + 1.0, Affine::term(y, -1.0)];
        let h = p.add_norm_bound(rows.clone(), Affine::constant(3.0), "ball").unwrap();
        let c = p.constraint(h);
        assert_eq!(c.kind, ConeKind::SecondOrder);
        assert_eq!(c.rows[0], Affine::constant(3.0));
        assert_eq!(&c.rows[1..], &rows[..]);
        assert_eq!(c.label, "ball");
        assert_eq!(p.var_names(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn rotated_cone_solves() {
        // maximize x s.t. x^2 <= 2 y, y <= 8 -> x = 4
        let mut p = ConicProblem::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        p.add_cone(
            ConeKind::RotatedSecondOrder,
            vec![y.into(), Affine::constant(1.0), x.into()],
            "",
        )
        .unwrap();
        p.add_nonneg(Affine::constant(8.0) - Affine::from(y), "").unwrap();
        p.set_objective(x.into()).unwrap();
        let r = p.solve(TOL);
        assert!(r.is_optimal());
        assert!((r.value(x) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn dump_lists_everything() {
        let mut p = ConicProblem::new();
        let t = p.add_var("t");
        let rho = p.add_var("rho");
        p.add_exp_rate_constraint(t, rho, "rate").unwrap();
        p.add_nonneg(Affine::constant(3.0) - Affine::from(rho), "cap").unwrap();
        p.set_objective(t.into()).unwrap();
        let text = p.dump();
        assert!(text.contains("var 0 t"));
        assert!(text.contains("var 1 rho"));
        assert!(text.contains("maximize"));
        assert!(text.contains("cone 0 exp 3 rate"));
        assert!(text.contains("cone 1 nonneg 1 cap"));
    }
}
