//! C interface to the compiler and simulator.
//!
//! Callers own every handle and string they receive: release systems with
//! `tnc_system_free`, networks with `tnc_network_free`, and returned strings
//! with `tnc_string_free`. All functions report a `TncStatus`; on any status
//! other than `Ok`, `tnc_last_error` returns a message describing the most
//! recent failure on the calling thread, valid until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tnc::expr::parse_rational;
use tnc::sim::{simulate, simulate_tn, SimParams, Trajectory};
use tnc::sysfile::SysFile;
use tnc::transform::{compile, estimate_gamma, CompileMode, CompileOptions, TnSystem};
use tnc::verify::{ratio_view, verify_all, VerifyOptions};

/// Outcome of an interface call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TncStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Compile = 4,
    Simulate = 5,
    Verify = 6,
    Estimate = 7,
    Internal = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(clean).unwrap());
}

fn failure(status: TncStatus, message: impl std::fmt::Display) -> TncStatus {
    set_error(&message.to_string());
    status
}

fn guard(body: impl FnOnce() -> TncStatus) -> TncStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => failure(TncStatus::Internal, "internal panic"),
    }
}

/// A parsed system file: the source ODEs plus events, bindings, and
/// simulation settings.
pub struct TncSystem {
    file: SysFile,
}

/// A compiled transcriptional network together with the file it came from.
pub struct TncNetwork {
    file: SysFile,
    tn: TnSystem,
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, TncStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(TncStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|e| {
        set_error(&format!("argument is not UTF-8: {e}"));
        TncStatus::InvalidUtf8
    })
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> TncStatus {
    let clean = text.replace('\0', " ");
    *out = CString::new(clean).unwrap().into_raw();
    TncStatus::Ok
}

fn params_with(file: &SysFile, t_end: f64, points: u32) -> SimParams {
    let mut p = file.sim_params();
    if t_end > 0.0 {
        p.t_end = t_end;
    }
    if points > 0 {
        p.points = points as usize;
    }
    p
}

fn csv(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("csv is ascii")
}

/// Parse system-file text into a handle. `text` may describe either an ODE
/// system or a reaction network in the `.crn` dialect.
#[no_mangle]
pub unsafe extern "C" fn tnc_system_parse(
    text: *const c_char,
    out: *mut *mut TncSystem,
) -> TncStatus {
    guard(|| {
        if out.is_null() {
            return failure(TncStatus::NullArgument, "null out pointer");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match SysFile::parse(text) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(TncSystem { file }));
                TncStatus::Ok
            }
            Err(e) => failure(TncStatus::Parse, e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnc_system_free(sys: *mut TncSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Compile the system into a transcriptional network. `gamma` may be null,
/// in which case the file's `gamma` line applies, or failing that an
/// estimate from the original trajectory with safety margin 1.1.
#[no_mangle]
pub unsafe extern "C" fn tnc_system_compile(
    sys: *const TncSystem,
    gamma: *const c_char,
    warmup: bool,
    out: *mut *mut TncNetwork,
) -> TncStatus {
    guard(|| {
        if sys.is_null() || out.is_null() {
            return failure(TncStatus::NullArgument, "null argument");
        }
        let file = &(*sys).file;
        let g = if gamma.is_null() {
            match &file.gamma {
                Some(g) => g.clone(),
                None => {
                    let ph = match file.placeholder_map() {
                        Ok(ph) => ph,
                        Err(e) => return failure(TncStatus::Compile, e),
                    };
                    let t_end = file.sim_params().t_end;
                    match estimate_gamma(&file.system, &file.events, t_end, 1.1, &ph) {
                        Ok(g) => g,
                        Err(e) => return failure(TncStatus::Estimate, e),
                    }
                }
            }
        } else {
            match read_str(gamma).and_then(|t| {
                parse_rational(t).map_err(|e| failure(TncStatus::Compile, e))
            }) {
                Ok(g) => g,
                Err(status) => return status,
            }
        };
        let mode = if warmup {
            CompileMode::Warmup
        } else {
            CompileMode::Stable
        };
        let mut opts = CompileOptions::new(g).mode(mode);
        if let Some(b) = &file.beta {
            opts = opts.beta(b.clone());
        }
        for (v, d) in &file.denom {
            opts = opts.denom_scale(v, d.clone());
        }
        match compile(&file.system, &opts) {
            Ok(tn) => {
                *out = Box::into_raw(Box::new(TncNetwork {
                    file: file.clone(),
                    tn,
                }));
                TncStatus::Ok
            }
            Err(e) => failure(TncStatus::Compile, e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnc_network_free(net: *mut TncNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Render the network in the system-file format, suitable for reloading.
#[no_mangle]
pub unsafe extern "C" fn tnc_network_print(
    net: *const TncNetwork,
    out: *mut *mut c_char,
) -> TncStatus {
    guard(|| {
        if net.is_null() || out.is_null() {
            return failure(TncStatus::NullArgument, "null argument");
        }
        let net = &*net;
        let printed =
            SysFile::from_network(&net.tn, net.file.sim.clone(), net.file.bindings.clone())
                .print();
        write_string(out, printed)
    })
}

/// Simulate the original system and return the trajectory as CSV text.
/// Pass `t_end <= 0` or `points == 0` to keep the file's settings.
#[no_mangle]
pub unsafe extern "C" fn tnc_system_simulate_csv(
    sys: *const TncSystem,
    t_end: f64,
    points: u32,
    out: *mut *mut c_char,
) -> TncStatus {
    guard(|| {
        if sys.is_null() || out.is_null() {
            return failure(TncStatus::NullArgument, "null argument");
        }
        let file = &(*sys).file;
        let ph = match file.placeholder_map() {
            Ok(ph) => ph,
            Err(e) => return failure(TncStatus::Simulate, e),
        };
        let params = params_with(file, t_end, points);
        match simulate(&file.system, &file.events, &params, &ph) {
            Ok(traj) => write_string(out, csv(&traj)),
            Err(e) => failure(TncStatus::Simulate, e),
        }
    })
}

/// Simulate the network and return the raw species trajectory as CSV text.
#[no_mangle]
pub unsafe extern "C" fn tnc_network_simulate_csv(
    net: *const TncNetwork,
    t_end: f64,
    points: u32,
    out: *mut *mut c_char,
) -> TncStatus {
    guard(|| {
        if net.is_null() || out.is_null() {
            return failure(TncStatus::NullArgument, "null argument");
        }
        let net = &*net;
        let ph = match net.file.placeholder_map() {
            Ok(ph) => ph,
            Err(e) => return failure(TncStatus::Simulate, e),
        };
        let params = params_with(&net.file, t_end, points);
        match simulate_tn(&net.tn, &net.file.events, &params, &ph) {
            Ok(traj) => write_string(out, csv(&traj)),
            Err(e) => failure(TncStatus::Simulate, e),
        }
    })
}

/// Simulate the network and return the ratio view, the reconstruction of
/// the original variables from the pair species, as CSV text.
#[no_mangle]
pub unsafe extern "C" fn tnc_network_ratio_csv(
    net: *const TncNetwork,
    t_end: f64,
    points: u32,
    out: *mut *mut c_char,
) -> TncStatus {
    guard(|| {
        if net.is_null() || out.is_null() {
            return failure(TncStatus::NullArgument, "null argument");
        }
        let net = &*net;
        let ph = match net.file.placeholder_map() {
            Ok(ph) => ph,
            Err(e) => return failure(TncStatus::Simulate, e),
        };
        let params = params_with(&net.file, t_end, points);
        let traj = match simulate_tn(&net.tn, &net.file.events, &params, &ph) {
            Ok(traj) => traj,
            Err(e) => return failure(TncStatus::Simulate, e),
        };
        match ratio_view(&traj, &net.tn) {
            Ok(view) => write_string(out, csv(&view)),
            Err(e) => failure(TncStatus::Simulate, e),
        }
    })
}

/// Run the verification battery of the network against its source system.
/// `passed` receives the verdict; the report text is line-oriented
/// `key = value` pairs. Pass tolerances `<= 0` for the defaults.
#[no_mangle]
pub unsafe extern "C" fn tnc_network_verify(
    net: *const TncNetwork,
    ratio_tol: f64,
    slack: f64,
    report: *mut *mut c_char,
    passed: *mut bool,
) -> TncStatus {
    guard(|| {
        if net.is_null() || report.is_null() || passed.is_null() {
            return failure(TncStatus::NullArgument, "null argument");
        }
        let net = &*net;
        let ph = match net.file.placeholder_map() {
            Ok(ph) => ph,
            Err(e) => return failure(TncStatus::Verify, e),
        };
        let mut opts = VerifyOptions::default();
        if ratio_tol > 0.0 {
            opts.ratio_tol = ratio_tol;
        }
        if slack > 0.0 {
            opts.slack = slack;
        }
        let params = net.file.sim_params();
        match verify_all(
            &net.file.system,
            &net.tn,
            &net.file.events,
            &params,
            &ph,
            &opts,
        ) {
            Ok(outcome) => {
                *passed = outcome.passed;
                write_string(report, outcome.to_string())
            }
            Err(e) => failure(TncStatus::Verify, e),
        }
    })
}

/// Estimate a sufficient decay constant from the original trajectory and
/// return it as an exact rational string. A `margin <= 0` means 1.1.
#[no_mangle]
pub unsafe extern "C" fn tnc_system_estimate_gamma(
    sys: *const TncSystem,
    margin: f64,
    out: *mut *mut c_char,
) -> TncStatus {
    guard(|| {
        if sys.is_null() || out.is_null() {
            return failure(TncStatus::NullArgument, "null argument");
        }
        let file = &(*sys).file;
        let ph = match file.placeholder_map() {
            Ok(ph) => ph,
            Err(e) => return failure(TncStatus::Estimate, e),
        };
        let margin = if margin > 0.0 { margin } else { 1.1 };
        let t_end = file.sim_params().t_end;
        match estimate_gamma(&file.system, &file.events, t_end, margin, &ph) {
            Ok(g) => write_string(out, g.to_string()),
            Err(e) => failure(TncStatus::Estimate, e),
        }
    })
}

/// Release a string returned through an out parameter.
#[no_mangle]
pub unsafe extern "C" fn tnc_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next interface call from the same thread.
#[no_mangle]
pub extern "C" fn tnc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}
