use std::ffi::{CStr, CString};
use std::ptr;

use spc_relay::planner::{run_scheme, RunOptions, Scheme};
use spc_relay::scenario::default_scenario;
use spc_relay_ffi::*;

fn last_error() -> String {
    let p = spc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn run_matches_the_library() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(spc_scenario_default(&mut s), SpcStatus::Ok);
        let key = CString::new("mission_time").unwrap();
        assert_eq!(spc_scenario_set(s, key.as_ptr(), 80.0), SpcStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(spc_run(s, SpcScheme::Tdfr, &mut r), SpcStatus::Ok);

        let expected = run_scheme(
            &default_scenario().with_timing(80.0, 1.0),
            Scheme::Tdfr,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(spc_result_east(r), expected.east);
        assert_eq!(spc_result_converged(r), expected.converged);
        assert_eq!(spc_result_iterations(r), expected.iterations());

        let n = spc_result_trace(r, ptr::null_mut(), 0);
        let mut trace = vec![0.0; n];
        assert_eq!(spc_result_trace(r, trace.as_mut_ptr(), n), n);
        assert_eq!(trace, expected.trace.east);

        assert_eq!(spc_result_n_slots(r), 80);
        let mut p = SpcSlotProfile::default();
        assert_eq!(spc_result_profile(r, 79, &mut p), SpcStatus::Ok);
        let e = &expected.profiles[79];
        assert_eq!((p.slot, p.x, p.b_s, p.l_u), (80, e.x, e.b_s, e.l_u));

        spc_result_free(r);
        spc_scenario_free(s);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut s = ptr::null_mut();
        let bad = CString::new("h_min = 200.0").unwrap();
        assert_eq!(spc_scenario_parse(bad.as_ptr(), &mut s), SpcStatus::Validation);
        assert!(s.is_null());
        assert!(last_error().contains("h_min"), "{}", last_error());

        let missing = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(spc_scenario_load(missing.as_ptr(), &mut s), SpcStatus::Io);

        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(spc_scenario_parse(not_utf8.as_ptr().cast(), &mut s), SpcStatus::InvalidUtf8);
        assert_eq!(spc_scenario_parse(ptr::null(), &mut s), SpcStatus::NullArgument);

        let ok = CString::new("").unwrap();
        assert_eq!(spc_scenario_parse(ok.as_ptr(), &mut s), SpcStatus::Ok);
        assert!(spc_last_error_message().is_null());
        let key = CString::new("altitude").unwrap();
        assert_eq!(spc_scenario_set(s, key.as_ptr(), 1.0), SpcStatus::Validation);
        assert_eq!(spc_scenario_n_slots(s), 100);
        spc_scenario_free(s);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        assert_eq!(spc_scenario_n_slots(ptr::null()), 0);
        assert!(spc_result_east(ptr::null()).is_nan());
        assert!(!spc_result_converged(ptr::null()));
        assert_eq!(spc_result_trace(ptr::null(), ptr::null_mut(), 0), 0);
        spc_scenario_free(ptr::null_mut());
        spc_result_free(ptr::null_mut());
        let v = CStr::from_ptr(spc_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
