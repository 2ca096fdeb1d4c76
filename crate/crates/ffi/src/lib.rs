//! C interface to `riscrs-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_build`
//! style functions and released with the matching `*_free`. Every function
//! returns a [`RiscrsStatus`]; on failure a message is available from
//! [`riscrs_last_error`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use riscrs_core::ao::{run_ao, AoOptions, Solution, Strategy};
use riscrs_core::{build_channel_set, ChannelSet, Error, ScenarioConfig};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiscrsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Solver = 4,
    Io = 5,
    Panic = 6,
}

/// Transmission scheme.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiscrsStrategy {
    RisCrs = 0,
    RisRsma = 1,
    RisSdma = 2,
    NorisCrs = 3,
    NorisRsma = 4,
    NorisSdma = 5,
}

impl From<RiscrsStrategy> for Strategy {
    fn from(s: RiscrsStrategy) -> Self {
        match s {
            RiscrsStrategy::RisCrs => Strategy::RisCrs,
            RiscrsStrategy::RisRsma => Strategy::RisRsma,
            RiscrsStrategy::RisSdma => Strategy::RisSdma,
            RiscrsStrategy::NorisCrs => Strategy::NorisCrs,
            RiscrsStrategy::NorisRsma => Strategy::NorisRsma,
            RiscrsStrategy::NorisSdma => Strategy::NorisSdma,
        }
    }
}

/// Rates of an optimized design, in bits/s/Hz.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RiscrsReport {
    pub c1_1: f64,
    pub c2_1: f64,
    pub r1_1: f64,
    pub r2_1: f64,
    pub c2_2: f64,
    pub rc: f64,
    pub r_tot: [f64; 2],
    pub min_rate: f64,
    pub beta: f64,
    pub a: [f64; 2],
    /// 1 if the design satisfies every constraint.
    pub feasible: u8,
    /// 1 if an inner solve failed and the best incumbent was returned.
    pub degraded: u8,
    pub outer_iterations: usize,
}

/// Scenario parameters.
pub struct RiscrsScenario {
    cfg: ScenarioConfig,
}

/// One channel realization.
pub struct RiscrsChannel {
    ch: ChannelSet,
}

/// Optimized design of one strategy.
pub struct RiscrsSolution {
    sol: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> RiscrsStatus {
    match e {
        Error::InvalidArgument(_) => RiscrsStatus::InvalidArgument,
        Error::Config { .. } => RiscrsStatus::Config,
        Error::Solver { .. } => RiscrsStatus::Solver,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => RiscrsStatus::Io,
    }
}

struct Failure(RiscrsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RiscrsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RiscrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RiscrsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RiscrsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RiscrsStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn riscrs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn riscrs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default scenario.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_default(out: *mut *mut RiscrsScenario) -> RiscrsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, RiscrsScenario { cfg: ScenarioConfig::default() });
        Ok(())
    })
}

/// Scenario parsed from TOML text; missing keys take default values.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` as in `riscrs_scenario_default`.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_from_toml(toml: *const c_char, out: *mut *mut RiscrsScenario) -> RiscrsStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = ScenarioConfig::from_toml_str(text)?;
        put(out, RiscrsScenario { cfg });
        Ok(())
    })
}

/// Scenario loaded from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as in `riscrs_scenario_default`.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_load(path: *const c_char, out: *mut *mut RiscrsScenario) -> RiscrsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = ScenarioConfig::load(path)?;
        put(out, RiscrsScenario { cfg });
        Ok(())
    })
}

unsafe fn with_scenario(s: *mut RiscrsScenario, f: impl FnOnce(&mut ScenarioConfig)) -> RiscrsStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("scenario"))?;
        let mut next = s.cfg.clone();
        f(&mut next);
        next.validate()?;
        s.cfg = next;
        Ok(())
    })
}

/// Sets the transmit SNR in dB (the relay power follows unless fixed).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_set_snr_db(scenario: *mut RiscrsScenario, snr_db: f64) -> RiscrsStatus {
    with_scenario(scenario, |c| *c = c.clone().with_snr_db(snr_db))
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_set_n_ris(scenario: *mut RiscrsScenario, n_ris: usize) -> RiscrsStatus {
    with_scenario(scenario, |c| c.n_ris = n_ris)
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_set_nt(scenario: *mut RiscrsScenario, nt: usize) -> RiscrsStatus {
    with_scenario(scenario, |c| c.nt = nt)
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_set_seed(scenario: *mut RiscrsScenario, seed: u64) -> RiscrsStatus {
    with_scenario(scenario, |c| c.seed = seed)
}

/// Releases a scenario; NULL is ignored.
///
/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn riscrs_scenario_free(scenario: *mut RiscrsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Draws the channel realization of `seed` for a scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn riscrs_channel_build(
    scenario: *const RiscrsScenario,
    seed: u64,
    out: *mut *mut RiscrsChannel,
) -> RiscrsStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ch = build_channel_set(&s.cfg, seed)?;
        put(out, RiscrsChannel { ch });
        Ok(())
    })
}

/// Transmit antennas of a channel, 0 for NULL.
///
/// # Safety
/// `channel` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscrs_channel_nt(channel: *const RiscrsChannel) -> usize {
    channel.as_ref().map_or(0, |c| c.ch.nt())
}

/// RIS elements of a channel, 0 for NULL.
///
/// # Safety
/// `channel` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscrs_channel_n_ris(channel: *const RiscrsChannel) -> usize {
    channel.as_ref().map_or(0, |c| c.ch.n_ris())
}

/// # Safety
/// `channel` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn riscrs_channel_free(channel: *mut RiscrsChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Optimizes `strategy` on `channel` with the scenario's powers and
/// tolerances, keeping the best of `n_starts` random phase starts.
///
/// # Safety
/// `scenario` and `channel` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn riscrs_solve(
    scenario: *const RiscrsScenario,
    channel: *const RiscrsChannel,
    strategy: RiscrsStrategy,
    n_starts: usize,
    out: *mut *mut RiscrsSolution,
) -> RiscrsStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let c = channel.as_ref().ok_or_else(|| null("channel"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = AoOptions { n_starts: n_starts.max(1), ..AoOptions::from_config(&s.cfg) };
        let sol = run_ao(&c.ch, strategy.into(), &opts)?;
        put(out, RiscrsSolution { sol });
        Ok(())
    })
}

/// Copies the rates of a solution into `report`.
///
/// # Safety
/// `solution` must be a live handle; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn riscrs_solution_report(solution: *const RiscrsSolution, report: *mut RiscrsReport) -> RiscrsStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.sol;
        let report = report.as_mut().ok_or_else(|| null("report"))?;
        let r = &s.report;
        *report = RiscrsReport {
            c1_1: r.c1_1,
            c2_1: r.c2_1,
            r1_1: r.r1_1,
            r2_1: r.r2_1,
            c2_2: r.c2_2,
            rc: r.rc,
            r_tot: r.r_tot,
            min_rate: r.min_rate,
            beta: s.design.beta,
            a: s.design.a,
            feasible: r.feasible as u8,
            degraded: s.degraded.is_some() as u8,
            outer_iterations: s.outer_iterations(),
        };
        Ok(())
    })
}

/// Full solution as a JSON object (precoders, phases in radians, rates,
/// traces). Release the string with `riscrs_string_free`.
///
/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn riscrs_solution_to_json(solution: *const RiscrsSolution, out: *mut *mut c_char) -> RiscrsStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.sol;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = serde_json::to_string(&s.to_record()).map_err(|e| Failure(RiscrsStatus::Io, e.to_string()))?;
        let c = CString::new(json).map_err(|e| Failure(RiscrsStatus::Io, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `solution` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn riscrs_solution_free(solution: *mut RiscrsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Releases a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn riscrs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
