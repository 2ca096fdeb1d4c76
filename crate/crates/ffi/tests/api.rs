use std::ffi::{CStr, CString};
use std::ptr;

use riscrs_ffi::*;

fn last_error() -> String {
    let p = riscrs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handles {
    sc: *mut RiscrsScenario,
    ch: *mut RiscrsChannel,
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            riscrs_channel_free(self.ch);
            riscrs_scenario_free(self.sc);
        }
    }
}

fn small_scenario(n_ris: usize) -> Handles {
    let mut h = Handles { sc: ptr::null_mut(), ch: ptr::null_mut() };
    unsafe {
        assert_eq!(riscrs_scenario_default(&mut h.sc), RiscrsStatus::Ok);
        assert_eq!(riscrs_scenario_set_n_ris(h.sc, n_ris), RiscrsStatus::Ok);
        assert_eq!(riscrs_channel_build(h.sc, 3, &mut h.ch), RiscrsStatus::Ok);
    }
    h
}

#[test]
fn solve_report_and_json_agree() {
    let h = small_scenario(2);
    unsafe {
        assert_eq!(riscrs_channel_nt(h.ch), 2);
        assert_eq!(riscrs_channel_n_ris(h.ch), 2);
        let mut sol = ptr::null_mut();
        assert_eq!(riscrs_solve(h.sc, h.ch, RiscrsStrategy::RisRsma, 1, &mut sol), RiscrsStatus::Ok);
        let mut rep = RiscrsReport::default();
        assert_eq!(riscrs_solution_report(sol, &mut rep), RiscrsStatus::Ok);
        assert_eq!(rep.feasible, 1);
        assert_eq!(rep.beta, 1.0);
        assert!(rep.min_rate > 0.0);
        assert!((rep.min_rate - rep.r_tot[0].min(rep.r_tot[1])).abs() < 1e-9);
        assert!(rep.outer_iterations >= 1);

        let mut json = ptr::null_mut();
        assert_eq!(riscrs_solution_to_json(sol, &mut json), RiscrsStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        riscrs_string_free(json);
        riscrs_solution_free(sol);

        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["strategy"], "RIS_RSMA");
        let min_rate = v["report"]["min_rate"].as_f64().unwrap();
        assert!((min_rate - rep.min_rate).abs() < 1e-12);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(riscrs_scenario_default(ptr::null_mut()), RiscrsStatus::NullPointer);
        assert!(last_error().contains("out"));
        assert_eq!(riscrs_scenario_set_snr_db(ptr::null_mut(), 10.0), RiscrsStatus::NullPointer);
        let mut ch = ptr::null_mut();
        assert_eq!(riscrs_channel_build(ptr::null(), 1, &mut ch), RiscrsStatus::NullPointer);
        assert!(ch.is_null());
        assert_eq!(riscrs_channel_nt(ptr::null()), 0);
        let mut rep = RiscrsReport::default();
        assert_eq!(riscrs_solution_report(ptr::null(), &mut rep), RiscrsStatus::NullPointer);
        riscrs_scenario_free(ptr::null_mut());
        riscrs_channel_free(ptr::null_mut());
        riscrs_solution_free(ptr::null_mut());
        riscrs_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_settings_leave_scenario_unchanged() {
    let h = small_scenario(1);
    unsafe {
        assert_eq!(riscrs_scenario_set_nt(h.sc, 0), RiscrsStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(riscrs_scenario_set_snr_db(h.sc, f64::NAN), RiscrsStatus::InvalidArgument);
        // the rejected values must not have stuck
        let mut ch = ptr::null_mut();
        assert_eq!(riscrs_channel_build(h.sc, 1, &mut ch), RiscrsStatus::Ok);
        assert_eq!(riscrs_channel_nt(ch), 2);
        riscrs_channel_free(ch);
        // success clears the message
        assert!(riscrs_last_error().is_null());
    }
}

#[test]
fn toml_scenarios_parse_and_fail_cleanly() {
    unsafe {
        let mut sc = ptr::null_mut();
        let good = CString::new("nt = 3\nn_ris = 5\n").unwrap();
        assert_eq!(riscrs_scenario_from_toml(good.as_ptr(), &mut sc), RiscrsStatus::Ok);
        let mut ch = ptr::null_mut();
        assert_eq!(riscrs_channel_build(sc, 1, &mut ch), RiscrsStatus::Ok);
        assert_eq!((riscrs_channel_nt(ch), riscrs_channel_n_ris(ch)), (3, 5));
        riscrs_channel_free(ch);
        riscrs_scenario_free(sc);

        let mut sc = ptr::null_mut();
        let bad = CString::new("nt = \"two\"").unwrap();
        assert_eq!(riscrs_scenario_from_toml(bad.as_ptr(), &mut sc), RiscrsStatus::Config);
        assert!(sc.is_null());

        let missing = CString::new("/nonexistent/riscrs.toml").unwrap();
        let st = riscrs_scenario_load(missing.as_ptr(), &mut sc);
        assert_ne!(st, RiscrsStatus::Ok);
        assert!(sc.is_null());
    }
}

#[test]
fn strategy_codes_map_to_their_schemes() {
    let h = small_scenario(1);
    let codes = [
        (RiscrsStrategy::RisCrs, "RIS_CRS"),
        (RiscrsStrategy::RisRsma, "RIS_RSMA"),
        (RiscrsStrategy::RisSdma, "RIS_SDMA"),
        (RiscrsStrategy::NorisCrs, "NORIS_CRS"),
        (RiscrsStrategy::NorisRsma, "NORIS_RSMA"),
        (RiscrsStrategy::NorisSdma, "NORIS_SDMA"),
    ];
    for (code, tag) in codes {
        unsafe {
            let mut sol = ptr::null_mut();
            assert_eq!(riscrs_solve(h.sc, h.ch, code, 1, &mut sol), RiscrsStatus::Ok, "{tag}");
            let mut json = ptr::null_mut();
            assert_eq!(riscrs_solution_to_json(sol, &mut json), RiscrsStatus::Ok);
            let text = CStr::from_ptr(json).to_str().unwrap();
            assert!(text.contains(&format!("\"strategy\":\"{tag}\"")), "{text}");
            riscrs_string_free(json);
            riscrs_solution_free(sol);
        }
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(riscrs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
