//! Complex vector helpers shared by the rate model and the SCA builders.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `a^H b`.
pub fn hdot(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &CVec) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn unit_phasor(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

pub fn all_finite(v: impl IntoIterator<Item = Complex64>) -> bool {
    v.into_iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
