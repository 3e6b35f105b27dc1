//! Drive the C entry points end to end from Rust: the happy path through
//! parse, compile, print, simulate, verify, and estimate, plus the error
//! reporting contract.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use tnc_ffi::*;

unsafe fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null());
    let text = CStr::from_ptr(ptr).to_str().unwrap().to_string();
    tnc_string_free(ptr);
    text
}

unsafe fn last_error() -> String {
    CStr::from_ptr(tnc_last_error()).to_str().unwrap().to_string()
}

const SINE: &str = "var x = 2\nvar y = 1\node x' = y - 2\node y' = 2 - x\ngamma 5/2\nsim t_end 25 points 250\n";

#[test]
fn full_pipeline_through_the_c_interface() {
    unsafe {
        let text = CString::new(SINE).unwrap();
        let mut sys: *mut TncSystem = ptr::null_mut();
        assert_eq!(tnc_system_parse(text.as_ptr(), &mut sys), TncStatus::Ok);

        let mut net: *mut TncNetwork = ptr::null_mut();
        assert_eq!(
            tnc_system_compile(sys, ptr::null(), false, &mut net),
            TncStatus::Ok
        );

        let mut printed: *mut c_char = ptr::null_mut();
        assert_eq!(tnc_network_print(net, &mut printed), TncStatus::Ok);
        let printed = take_string(printed);
        assert!(printed.contains("ode x_T' = x_B*y_T/y_B + x_T/x_B - 5/2*x_T"));
        assert!(printed.contains("beta 1"));

        let mut csv: *mut c_char = ptr::null_mut();
        assert_eq!(tnc_system_simulate_csv(sys, 0.0, 10, &mut csv), TncStatus::Ok);
        let csv = take_string(csv);
        assert!(csv.starts_with("t,x,y\n"));
        assert_eq!(csv.lines().count(), 12);

        let mut ratio: *mut c_char = ptr::null_mut();
        assert_eq!(tnc_network_ratio_csv(net, 1.0, 10, &mut ratio), TncStatus::Ok);
        let ratio = take_string(ratio);
        assert!(ratio.starts_with("t,x,y\n"));
        let last = ratio.lines().last().unwrap();
        let x: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        assert!((x - (2.0 - 1.0_f64.sin())).abs() < 1e-5);

        let mut species: *mut c_char = ptr::null_mut();
        assert_eq!(
            tnc_network_simulate_csv(net, 1.0, 10, &mut species),
            TncStatus::Ok
        );
        assert!(take_string(species).starts_with("t,x_T,x_B,y_T,y_B\n"));

        let mut report: *mut c_char = ptr::null_mut();
        let mut passed = false;
        assert_eq!(
            tnc_network_verify(net, 0.0, 0.0, &mut report, &mut passed),
            TncStatus::Ok
        );
        assert!(passed);
        assert!(take_string(report).contains("symbolic_identity = exact"));

        let mut gamma: *mut c_char = ptr::null_mut();
        assert_eq!(tnc_system_estimate_gamma(sys, 1.0, &mut gamma), TncStatus::Ok);
        assert_eq!(take_string(gamma), "5/2");

        tnc_network_free(net);
        tnc_system_free(sys);
    }
}

#[test]
fn warmup_compilation_drops_beta() {
    unsafe {
        let text = CString::new(SINE).unwrap();
        let mut sys: *mut TncSystem = ptr::null_mut();
        assert_eq!(tnc_system_parse(text.as_ptr(), &mut sys), TncStatus::Ok);
        let mut net: *mut TncNetwork = ptr::null_mut();
        assert_eq!(
            tnc_system_compile(sys, ptr::null(), true, &mut net),
            TncStatus::Ok
        );
        let mut printed: *mut c_char = ptr::null_mut();
        assert_eq!(tnc_network_print(net, &mut printed), TncStatus::Ok);
        assert!(!take_string(printed).contains("beta"));
        tnc_network_free(net);
        tnc_system_free(sys);
    }
}

#[test]
fn failures_set_codes_and_messages() {
    unsafe {
        let mut sys: *mut TncSystem = ptr::null_mut();

        assert_eq!(
            tnc_system_parse(ptr::null(), &mut sys),
            TncStatus::NullArgument
        );
        assert!(!last_error().is_empty());

        let garbage = CString::new("ode equals nothing").unwrap();
        assert_eq!(
            tnc_system_parse(garbage.as_ptr(), &mut sys),
            TncStatus::Parse
        );
        assert!(!last_error().is_empty());

        let text = CString::new(SINE).unwrap();
        assert_eq!(tnc_system_parse(text.as_ptr(), &mut sys), TncStatus::Ok);
        let mut net: *mut TncNetwork = ptr::null_mut();
        let bad_gamma = CString::new("-1").unwrap();
        assert_eq!(
            tnc_system_compile(sys, bad_gamma.as_ptr(), false, &mut net),
            TncStatus::Compile
        );
        assert!(last_error().contains("gamma"));
        assert!(net.is_null());

        tnc_system_free(sys);
        tnc_system_free(ptr::null_mut());
        tnc_network_free(ptr::null_mut());
        tnc_string_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/tnc.h"
    ))
    .expect("header generated at build time");
    for symbol in [
        "tnc_system_parse",
        "tnc_system_free",
        "tnc_system_compile",
        "tnc_system_simulate_csv",
        "tnc_system_estimate_gamma",
        "tnc_network_free",
        "tnc_network_print",
        "tnc_network_simulate_csv",
        "tnc_network_ratio_csv",
        "tnc_network_verify",
        "tnc_string_free",
        "tnc_last_error",
        "typedef struct TncSystem TncSystem",
        "typedef struct TncNetwork TncNetwork",
        "TncStatus_Ok = 0",
    ] {
        assert!(header.contains(symbol), "header lacks `{symbol}`");
    }
}
