//! Scenario configuration.
//!
//! A scenario is a flat TOML table; every key is optional and falls back to
//! the reference geometry below. Unknown keys are rejected.
//!
//! ```toml
//! bs_pos = [0.0, 0.0]
//! ris_pos = [40.0, 10.0]
//! u1_pos = [40.0, 0.0]
//! u2_pos = [60.0, 0.0]
//! nt = 2
//! n_ris = 4
//! exponent_bs_u1 = 2.0
//! exponent_bs_u2 = 3.0
//! exponent_bs_ris = 3.0
//! exponent_ris_user = 3.5
//! exponent_u1_u2 = 1.5
//! l0_db = -30.0
//! pt_dbm = 15.0
//! # pr_dbm defaults to pt_dbm
//! noise_dbm = -66.0
//! seed = 1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub u1_pos: [f64; 2],
    pub u2_pos: [f64; 2],
    pub nt: usize,
    pub n_ris: usize,
    pub exponent_bs_u1: f64,
    pub exponent_bs_u2: f64,
    pub exponent_bs_ris: f64,
    /// Used for RIS to U1, RIS to U2 and U1 to RIS.
    pub exponent_ris_user: f64,
    pub exponent_u1_u2: f64,
    pub l0_db: f64,
    pub pt_dbm: f64,
    /// Relay transmit power; `None` tracks `pt_dbm`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pr_dbm: Option<f64>,
    pub noise_dbm: f64,
    /// Transmit power at 0 dB "transmitter SNR" on sweep axes:
    /// `pt_dbm = snr_db + snr_reference_dbm`. Set it to `noise_dbm` to make
    /// the axis read as Pt/sigma^2.
    pub snr_reference_dbm: f64,
    pub seed: u64,
    pub sca_tol: f64,
    pub ao_tol: f64,
    pub max_iters_sca: usize,
    pub max_iters_ao: usize,
    pub penalty_c: f64,
    pub solver_tol: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bs_pos: [0.0, 0.0],
            ris_pos: [40.0, 10.0],
            u1_pos: [40.0, 0.0],
            u2_pos: [60.0, 0.0],
            nt: 2,
            n_ris: 4,
            exponent_bs_u1: 2.0,
            exponent_bs_u2: 3.0,
            exponent_bs_ris: 3.0,
            exponent_ris_user: 3.5,
            exponent_u1_u2: 1.5,
            l0_db: -30.0,
            pt_dbm: 15.0,
            pr_dbm: None,
            noise_dbm: -66.0,
            snr_reference_dbm: 0.0,
            seed: 1,
            sca_tol: 1e-3,
            ao_tol: 1e-3,
            max_iters_sca: 200,
            max_iters_ao: 50,
            penalty_c: 100.0,
            solver_tol: 1e-8,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: "<string>".into(),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 {
            return Err(Error::invalid("nt must be at least 1"));
        }
        let exps = [
            ("exponent_bs_u1", self.exponent_bs_u1),
            ("exponent_bs_u2", self.exponent_bs_u2),
            ("exponent_bs_ris", self.exponent_bs_ris),
            ("exponent_ris_user", self.exponent_ris_user),
            ("exponent_u1_u2", self.exponent_u1_u2),
        ];
        for (name, v) in exps {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let finite = [
            ("l0_db", self.l0_db),
            ("pt_dbm", self.pt_dbm),
            ("pr_dbm", self.pr_dbm()),
            ("noise_dbm", self.noise_dbm),
            ("snr_reference_dbm", self.snr_reference_dbm),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if !(self.noise_power() > 0.0) {
            return Err(Error::invalid("noise power must be positive"));
        }
        for (name, v) in [
            ("sca_tol", self.sca_tol),
            ("ao_tol", self.ao_tol),
            ("solver_tol", self.solver_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if !(self.penalty_c.is_finite() && self.penalty_c >= 0.0) {
            return Err(Error::invalid("penalty_c must be nonnegative"));
        }
        if self.max_iters_sca == 0 || self.max_iters_ao == 0 {
            return Err(Error::invalid("iteration caps must be at least 1"));
        }
        for p in [self.bs_pos, self.ris_pos, self.u1_pos, self.u2_pos] {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::invalid("positions must be finite"));
            }
        }
        Ok(())
    }

    pub fn pr_dbm(&self) -> f64 {
        self.pr_dbm.unwrap_or(self.pt_dbm)
    }

    pub fn pt_watts(&self) -> f64 {
        dbm_to_watts(self.pt_dbm)
    }

    pub fn pr_watts(&self) -> f64 {
        dbm_to_watts(self.pr_dbm())
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    /// Sets the BS power from a transmitter-SNR axis value; the relay follows
    /// unless it was pinned explicitly.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.pt_dbm = snr_db + self.snr_reference_dbm;
        self
    }

    pub fn snr_db(&self) -> f64 {
        self.pt_dbm - self.snr_reference_dbm
    }
}
