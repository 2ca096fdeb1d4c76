use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Index of a real decision variable in a [`super::ConicProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(usize);

impl Var {
    pub(crate) fn new(i: usize) -> Self {
        Var(i)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// `sum_i coef_i * x_i + constant`. Repeated variables are allowed and summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    terms: Vec<(Var, f64)>,
    constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(v: Var, coef: f64) -> Self {
        Self { terms: vec![(v, coef)], constant: 0.0 }
    }

    pub fn terms(&self) -> &[(Var, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn add_term(&mut self, v: Var, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * x[v.index()]).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|(_, c)| c.is_finite())
    }

    /// Terms with duplicates merged and zeros dropped, sorted by variable.
    pub fn merged(&self) -> Vec<(Var, f64)> {
        let mut t = self.terms.clone();
        t.sort_by_key(|(v, _)| *v);
        let mut out: Vec<(Var, f64)> = Vec::with_capacity(t.len());
        for (v, c) in t {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        out
    }
}

impl From<Var> for Affine {
    fn from(v: Var) -> Self {
        Affine::term(v, 1.0)
    }
}

impl From<f64> for Affine {
    fn from(c: f64) -> Self {
        Affine::constant(c)
    }
}

impl AddAssign<Affine> for Affine {
    fn add_assign(&mut self, rhs: Affine) {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Add<Affine> for Affine {
    type Output = Affine;
    fn add(mut self, rhs: Affine) -> Affine {
        self += rhs;
        self
    }
}

impl Add<f64> for Affine {
    type Output = Affine;
    fn add(mut self, rhs: f64) -> Affine {
        self.constant += rhs;
        self
    }
}

impl Sub<Affine> for Affine {
    type Output = Affine;
    fn sub(self, rhs: Affine) -> Affine {
        self + (-rhs)
    }
}

impl Sub<f64> for Affine {
    type Output = Affine;
    fn sub(self, rhs: f64) -> Affine {
        self + (-rhs)
    }
}

impl Mul<f64> for Affine {
    type Output = Affine;
    fn mul(mut self, rhs: f64) -> Affine {
        for (_, c) in &mut self.terms {
            *c *= rhs;
        }
        self.constant *= rhs;
        self
    }
}

impl Neg for Affine {
    type Output = Affine;
    fn neg(self) -> Affine {
        self * -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_merge() {
        let (x, y) = (Var::new(0), Var::new(1));
        let e = (Affine::from(x) * 2.0 + Affine::term(y, 3.0) - Affine::from(x) + 1.5) * 2.0;
        assert_eq!(e.eval(&[1.0, 1.0]), (2.0 + 3.0 - 1.0 + 1.5) * 2.0);
        assert_eq!(e.merged(), vec![(x, 2.0), (y, 6.0)]);
        let z = Affine::from(x) - Affine::from(x);
        assert!(z.merged().is_empty());
    }
}
