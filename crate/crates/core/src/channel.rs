//! Channel realizations: distance-based path loss times i.i.d. Rayleigh fading.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::linalg::{all_finite, CMat, CVec};
use crate::rng::{channel_rng, Stream};
use crate::{Error, Result};

/// Large-scale gain `10^(l0_db/10) * d^(-exponent)`.
pub fn path_loss(distance_m: f64, exponent: f64, l0_db: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {distance_m}")));
    }
    if !(exponent > 0.0) {
        return Err(Error::invalid(format!("path-loss exponent must be positive, got {exponent}")));
    }
    Ok(10f64.powf(l0_db / 10.0) * distance_m.powf(-exponent))
}

/// I.i.d. CN(0, variance) entries.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> Result<CMat> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!("variance must be nonnegative, got {variance}")));
    }
    let scale = (variance / 2.0).sqrt();
    // column-major fill order, real part drawn before imaginary part
    Ok(DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(scale * re, scale * im)
    }))
}

fn sample_vec<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> Result<CVec> {
    let m = sample_complex_gaussian(len, 1, variance, rng)?;
    Ok(DVector::from_iterator(len, m.iter().copied()))
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Link distances of a scenario, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    pub bs_u1: f64,
    pub bs_u2: f64,
    pub bs_ris: f64,
    pub ris_u1: f64,
    pub ris_u2: f64,
    pub u1_u2: f64,
}

impl Distances {
    pub fn of(cfg: &ScenarioConfig) -> Self {
        Self {
            bs_u1: distance(cfg.bs_pos, cfg.u1_pos),
            bs_u2: distance(cfg.bs_pos, cfg.u2_pos),
            bs_ris: distance(cfg.bs_pos, cfg.ris_pos),
            ris_u1: distance(cfg.ris_pos, cfg.u1_pos),
            ris_u2: distance(cfg.ris_pos, cfg.u2_pos),
            u1_u2: distance(cfg.u1_pos, cfg.u2_pos),
        }
    }
}

/// All complex gains of one realization.
///
/// `g` is `N x Nt` (BS to RIS), `g1`/`g2` are BS to user, `h1`/`h2` RIS to
/// user, `h12` U1 to U2, `h_1r` U1 to RIS and `h_r2` RIS to U2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub g: CMat,
    pub g1: CVec,
    pub g2: CVec,
    pub h1: CVec,
    pub h2: CVec,
    pub h12: Complex64,
    pub h_1r: CVec,
    pub h_r2: CVec,
    pub noise_power: f64,
}

impl ChannelSet {
    pub fn nt(&self) -> usize {
        self.g1.len()
    }

    pub fn n_ris(&self) -> usize {
        self.h1.len()
    }

    /// Direct channel of user `k` (1 or 2).
    pub fn direct(&self, k: usize) -> &CVec {
        match k {
            1 => &self.g1,
            2 => &self.g2,
            _ => panic!("user index must be 1 or 2, got {k}"),
        }
    }

    /// RIS-to-user channel of user `k` (1 or 2).
    pub fn reflect(&self, k: usize) -> &CVec {
        match k {
            1 => &self.h1,
            2 => &self.h2,
            _ => panic!("user index must be 1 or 2, got {k}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, nt) = (self.n_ris(), self.nt());
        if nt == 0 {
            return Err(Error::invalid("channel set has no transmit antennas"));
        }
        if self.g2.len() != nt
            || self.g.nrows() != n
            || (n > 0 && self.g.ncols() != nt)
            || self.h2.len() != n
            || self.h_1r.len() != n
            || self.h_r2.len() != n
        {
            return Err(Error::invalid(format!(
                "inconsistent channel dimensions (N = {n}, Nt = {nt})"
            )));
        }
        let finite = all_finite(self.g.iter().copied())
            && all_finite(self.g1.iter().copied())
            && all_finite(self.g2.iter().copied())
            && all_finite(self.h1.iter().copied())
            && all_finite(self.h2.iter().copied())
            && all_finite(self.h_1r.iter().copied())
            && all_finite(self.h_r2.iter().copied())
            && all_finite([self.h12]);
        if !finite {
            return Err(Error::invalid("channel set has non-finite entries"));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::invalid("noise power must be positive"));
        }
        Ok(())
    }

    /// Same realization with the RIS removed (N = 0).
    pub fn without_ris(&self) -> Self {
        let nt = self.nt();
        Self {
            g: DMatrix::zeros(0, nt),
            g1: self.g1.clone(),
            g2: self.g2.clone(),
            h1: DVector::zeros(0),
            h2: DVector::zeros(0),
            h12: self.h12,
            h_1r: DVector::zeros(0),
            h_r2: DVector::zeros(0),
            noise_power: self.noise_power,
        }
    }

    /// Same dimensions with every RIS-side gain set to zero.
    pub fn with_ris_zeroed(&self) -> Self {
        let mut out = self.clone();
        out.g.fill(Complex64::new(0.0, 0.0));
        for v in [&mut out.h1, &mut out.h2, &mut out.h_1r, &mut out.h_r2] {
            v.fill(Complex64::new(0.0, 0.0));
        }
        out
    }
}

/// Draws one realization. Each member uses its own random stream, so the
/// direct links of a seed do not change when `n_ris` changes.
pub fn build_channel_set(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let d = Distances::of(cfg);
    let pl = |dist: f64, exp: f64| path_loss(dist, exp, cfg.l0_db);
    let (n, nt) = (cfg.n_ris, cfg.nt);

    let var_g1 = pl(d.bs_u1, cfg.exponent_bs_u1)?;
    let var_g2 = pl(d.bs_u2, cfg.exponent_bs_u2)?;
    let var_h12 = pl(d.u1_u2, cfg.exponent_u1_u2)?;
    let (var_g, var_h1, var_h2) = if n > 0 {
        (
            pl(d.bs_ris, cfg.exponent_bs_ris)?,
            pl(d.ris_u1, cfg.exponent_ris_user)?,
            pl(d.ris_u2, cfg.exponent_ris_user)?,
        )
    } else {
        (0.0, 0.0, 0.0)
    };

    let g = sample_complex_gaussian(n, nt, var_g, &mut channel_rng(seed, Stream::BsRis))?;
    let g1 = sample_vec(nt, var_g1, &mut channel_rng(seed, Stream::BsU1))?;
    let g2 = sample_vec(nt, var_g2, &mut channel_rng(seed, Stream::BsU2))?;
    let h1 = sample_vec(n, var_h1, &mut channel_rng(seed, Stream::RisU1))?;
    let h2 = sample_vec(n, var_h2, &mut channel_rng(seed, Stream::RisU2))?;
    let h12 = sample_vec(1, var_h12, &mut channel_rng(seed, Stream::U1U2))?[0];
    // U1 -> RIS is the same geometric link as RIS -> U1 but drawn independently.
    let h_1r = sample_vec(n, var_h1, &mut channel_rng(seed, Stream::U1Ris))?;
    let h_r2 = sample_vec(n, var_h2, &mut channel_rng(seed, Stream::RisU2Relay))?;

    Ok(ChannelSet {
        g,
        g1,
        g2,
        h1,
        h2,
        h12,
        h_1r,
        h_r2,
        noise_power: cfg.noise_power(),
    })
}
