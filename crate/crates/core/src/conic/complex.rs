use num_complex::Complex64;

use super::{Affine, Var};

/// A complex affine expression kept as its real and imaginary parts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexAffine {
    pub re: Affine,
    pub im: Affine,
}

impl ComplexAffine {
    pub fn constant(c: Complex64) -> Self {
        Self { re: Affine::constant(c.re), im: Affine::constant(c.im) }
    }

    /// Adds `coef * (x_re + j x_im)`.
    pub fn add_scaled(&mut self, coef: Complex64, x_re: Var, x_im: Var) -> &mut Self {
        self.re.add_term(x_re, coef.re).add_term(x_im, -coef.im);
        self.im.add_term(x_re, coef.im).add_term(x_im, coef.re);
        self
    }

    /// `Re{c^* z}` as a real affine form.
    pub fn real_inner(&self, c: Complex64) -> Affine {
        self.re.clone() * c.re + self.im.clone() * c.im
    }

    pub fn rows(&self) -> [Affine; 2] {
        [self.re.clone(), self.im.clone()]
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}
