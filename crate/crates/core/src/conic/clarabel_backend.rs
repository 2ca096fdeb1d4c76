use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{ConeKind, ConicBackend, ConicProblem, SolveResult, SolveStatus};

/// Largest violation tolerated when Clarabel reports reduced accuracy.
const ALMOST_SOLVED_VIOLATION: f64 = 1e-6;

/// Interior-point backend using the Clarabel solver.
#[derive(Debug, Clone)]
pub struct ClarabelBackend {
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self { max_iter: 200, verbose: false }
    }
}

/// Clarabel form: `min q^T x  s.t.  s = b - A x in K`.
struct Standard {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    q: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

fn to_standard(p: &ConicProblem) -> Standard {
    let n = p.num_vars();
    let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let sqrt_half = 0.5f64.sqrt();

    let mut push_row = |terms: Vec<(super::Var, f64)>, constant: f64, b: &mut Vec<f64>| {
        let row = b.len();
        for (v, c) in terms {
            ii.push(row);
            jj.push(v.index());
            vv.push(-c);
        }
        b.push(constant);
    };

    for c in p.constraints() {
        match c.kind {
            ConeKind::RotatedSecondOrder => {
                // (u, v, w) -> ((u + v)/sqrt2, (u - v)/sqrt2, w) in the SOC
                let (u, v) = (&c.rows[0], &c.rows[1]);
                let sum = (u.clone() + v.clone()) * sqrt_half;
                let diff = (u.clone() - v.clone()) * sqrt_half;
                push_row(sum.merged(), sum.constant_term(), &mut b);
                push_row(diff.merged(), diff.constant_term(), &mut b);
                for r in &c.rows[2..] {
                    push_row(r.merged(), r.constant_term(), &mut b);
                }
                cones.push(SupportedConeT::SecondOrderConeT(c.rows.len()));
            }
            kind => {
                for r in &c.rows {
                    push_row(r.merged(), r.constant_term(), &mut b);
                }
                cones.push(match kind {
                    ConeKind::Zero => SupportedConeT::ZeroConeT(c.rows.len()),
                    ConeKind::NonNegative => SupportedConeT::NonnegativeConeT(c.rows.len()),
                    ConeKind::SecondOrder => SupportedConeT::SecondOrderConeT(c.rows.len()),
                    ConeKind::Exponential => SupportedConeT::ExponentialConeT(),
                    ConeKind::RotatedSecondOrder => unreachable!(),
                });
            }
        }
    }

    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, ii, jj, vv);
    let mut q = vec![0.0; n];
    for (v, c) in p.objective().merged() {
        q[v.index()] = -c;
    }
    Standard { a, b, q, cones }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, problem: &ConicProblem, tol: f64) -> SolveResult {
        let n = problem.num_vars();
        let failed = |status| SolveResult {
            status,
            x: vec![f64::NAN; n],
            objective_value: f64::NAN,
            iterations: 0,
        };
        if n == 0 {
            let feasible = problem.max_violation(&[]) <= tol;
            return SolveResult {
                status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
                x: Vec::new(),
                objective_value: problem.objective().constant_term(),
                iterations: 0,
            };
        }
        let std = to_standard(problem);
        let mut last = failed(SolveStatus::NumericalFailure);
        // interior-point runs occasionally stall on small degenerate problems;
        // rerunning without equilibration, then at looser tolerance, usually
        // lands
        for tol in retry_tolerances(tol) {
            for equilibrate in [true, false] {
                let res = self.solve_standard(problem, &std, tol, equilibrate);
                if res.is_optimal() || matches!(res.status, SolveStatus::Infeasible | SolveStatus::Unbounded) {
                    return res;
                }
                last = res;
            }
        }
        last
    }
}

fn retry_tolerances(tol: f64) -> Vec<f64> {
    let mut out = vec![tol];
    for loose in [1e-7, 1e-6] {
        if loose > *out.last().unwrap() {
            out.push(loose);
        }
    }
    out
}

impl ClarabelBackend {
    fn solve_standard(&self, problem: &ConicProblem, std: &Standard, tol: f64, equilibrate: bool) -> SolveResult {
        let n = problem.num_vars();
        let failed = |status| SolveResult {
            status,
            x: vec![f64::NAN; n],
            objective_value: f64::NAN,
            iterations: 0,
        };
        let p = CscMatrix::zeros((n, n));
        let settings = DefaultSettings {
            verbose: self.verbose,
            max_iter: self.max_iter,
            tol_gap_abs: tol,
            tol_gap_rel: tol,
            tol_feas: tol,
            tol_ktratio: tol.max(1e-10).sqrt() * 1e-2,
            equilibrate_enable: equilibrate,
            ..DefaultSettings::default()
        };
        let mut solver = match DefaultSolver::new(&p, &std.q, &std.a, &std.b, &std.cones, settings) {
            Ok(s) => s,
            Err(_) => return failed(SolveStatus::NumericalFailure),
        };
        solver.solve();
        let sol = &solver.solution;
        let x = sol.x.clone();
        let objective_value = problem.objective().eval(&x);
        let status = match sol.status {
            SolverStatus::Solved if x.iter().all(|v| v.is_finite()) => SolveStatus::Optimal,
            SolverStatus::AlmostSolved | SolverStatus::InsufficientProgress => {
                if x.iter().all(|v| v.is_finite())
                    && problem.max_violation(&x) <= ALMOST_SOLVED_VIOLATION
                {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::NumericalFailure
                }
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIter,
            _ => SolveStatus::NumericalFailure,
        };
        SolveResult { status, x, objective_value, iterations: sol.iterations }
    }
}
