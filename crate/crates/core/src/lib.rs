//! Simulation and optimization of RIS-aided cooperative rate splitting (CRS)
//! in a two-user MISO downlink.
//!
//! The crate is layered bottom-up:
//!
//! * [`channel`] draws path-loss scaled Rayleigh channels for a scenario.
//! * [`rates`] evaluates the exact two-slot rate model for a design.
//! * [`conic`] is a small conic-program builder with a pluggable backend.
//! * [`sca_beam`] and [`sca_phase`] are the two SCA blocks (beamforming /
//!   common rate / time split, and slot-1 RIS phases).
//! * [`ao`] alternates the two blocks and realizes the six strategies.
//! * [`oracle`] is a brute-force grid used to check the optimizers.
//! * [`harness`] runs Monte Carlo sweeps and writes CSV.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ao;
pub mod channel;
pub mod config;
pub mod conic;
mod error;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod rates;
pub mod rng;
pub mod sca_beam;
pub mod sca_phase;

pub use ao::{run_ao, AoOptions, Solution, Strategy};
pub use sca_beam::{BeamHooks, BeamIterate};
pub use sca_phase::PhaseIterate;
pub use channel::{build_channel_set, ChannelSet};
pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use rates::{evaluate_design, PhaseConfig, RateReport, TxDesign};

/// Lower bound on the slot-1 time fraction.
pub const BETA_MIN: f64 = 0.01;
