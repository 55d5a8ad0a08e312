//! C ABI over the core library: opaque scenario handles, status codes, and
//! string-returning entry points. Every returned string is owned by the
//! caller and must be released with `prox_string_free`.
//!
//! Error reporting: functions returning a pointer yield null on failure,
//! functions returning `ProxStatus` yield a nonzero code; either way the
//! message is available from `prox_last_error` (thread-local).

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;

use proxmeta::rate::nat;
use proxmeta::verify::{self, CounterexampleFn, VerifyOptions};
use proxmeta::{RateFn, Scenario, ScenarioConfig, engine, moduli};

/// Opaque scenario handle.
pub struct ProxScenario {
    inner: Scenario,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxStatus {
    Ok = 0,
    /// Malformed input (JSON, rationals, parameters).
    ConfigError = 1,
    /// The computation itself failed (caps, guards, solver).
    RuntimeError = 2,
    /// A required pointer was null or not valid UTF-8.
    NullArgument = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let c = CString::new(message).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn own_string(s: String) -> *mut c_char {
    CString::new(s)
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn required_str<'a>(ptr: *const c_char) -> Result<&'a str, ProxStatus> {
    if ptr.is_null() {
        set_error("null argument");
        return Err(ProxStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        ProxStatus::NullArgument
    })
}

/// Message for the most recent failure on this thread, or null. Owned by the
/// caller; release with `prox_string_free`.
#[unsafe(no_mangle)]
pub extern "C" fn prox_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => own_string(c.to_string_lossy().into_owned()),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library. Null is a no-op.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parse a scenario from its JSON document. Returns null on failure.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_scenario_parse(json: *const c_char) -> *mut ProxScenario {
    clear_error();
    let Ok(text) = (unsafe { required_str(json) }) else {
        return std::ptr::null_mut();
    };
    let scenario = ScenarioConfig::from_json(text).and_then(|cfg| cfg.to_scenario());
    match scenario {
        Ok(inner) => Box::into_raw(Box::new(ProxScenario { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Release a scenario handle. Null is a no-op.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_scenario_free(sc: *mut ProxScenario) {
    if !sc.is_null() {
        drop(unsafe { Box::from_raw(sc) });
    }
}

unsafe fn scenario<'a>(sc: *const ProxScenario) -> Result<&'a Scenario, ProxStatus> {
    if sc.is_null() {
        set_error("null scenario handle");
        return Err(ProxStatus::NullArgument);
    }
    Ok(unsafe { &(*sc).inner })
}

fn run_export(
    sc: *const ProxScenario,
    steps: u64,
    render: impl Fn(&engine::Trajectory) -> String,
) -> *mut c_char {
    clear_error();
    let Ok(sc) = (unsafe { scenario(sc) }) else {
        return std::ptr::null_mut();
    };
    match engine::run(sc, steps) {
        Ok(traj) => own_string(render(&traj)),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Run the iteration and export the trajectory as CSV.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_run_csv(sc: *const ProxScenario, steps: u64) -> *mut c_char {
    run_export(sc, steps, |t| t.to_csv())
}

/// Run the iteration and export the trajectory as JSON.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_run_json(sc: *const ProxScenario, steps: u64) -> *mut c_char {
    run_export(sc, steps, |t| t.to_json().to_string())
}

fn bound_string(
    sc: *const ProxScenario,
    compute: impl Fn(&moduli::BoundContext) -> Result<proxmeta::Nat, proxmeta::ModuliError>,
) -> *mut c_char {
    clear_error();
    let Ok(sc) = (unsafe { scenario(sc) }) else {
        return std::ptr::null_mut();
    };
    let ctx = match verify::bound_context(sc) {
        Ok(ctx) => ctx,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    match compute(&ctx) {
        Ok(v) => own_string(v.to_string()),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// The approximate fixed-point modulus Phi(k), as a decimal string.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_phi(sc: *const ProxScenario, k: u64) -> *mut c_char {
    bound_string(sc, |ctx| moduli::approx_point_modulus(ctx, &nat(k)))
}

/// The total-boundedness count alpha(k), as a decimal string.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_alpha(sc: *const ProxScenario, k: u64) -> *mut c_char {
    bound_string(sc, |ctx| Ok(ctx.alpha.eval(&nat(k))?))
}

unsafe fn parse_g_rate(g: *const c_char) -> Result<RateFn, ProxStatus> {
    let spec = unsafe { required_str(g) }?;
    if spec.trim_start().starts_with('{') {
        return serde_json::from_str(spec).map_err(|e| {
            set_error(format!("bad g expression: {e}"));
            ProxStatus::ConfigError
        });
    }
    CounterexampleFn::parse(spec).map(|g| g.rate_fn()).map_err(|e| {
        set_error(e.to_string());
        ProxStatus::ConfigError
    })
}

/// The metastability bound Psi(k, g) as a decimal string. `g` is either the
/// shorthand (`const:N`, `idplus:N`, `doubling`, `table:a,b,c`) or a JSON
/// rate-function AST.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_psi(
    sc: *const ProxScenario,
    k: u64,
    g: *const c_char,
) -> *mut c_char {
    let Ok(g) = (unsafe { parse_g_rate(g) }) else {
        return std::ptr::null_mut();
    };
    bound_string(sc, |ctx| moduli::psi_rate(ctx, &nat(k), &g))
}

/// The metastability bound Omega(k, g); see `prox_psi` for the g format.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_omega(
    sc: *const ProxScenario,
    k: u64,
    g: *const c_char,
) -> *mut c_char {
    let Ok(g) = (unsafe { parse_g_rate(g) }) else {
        return std::ptr::null_mut();
    };
    bound_string(sc, |ctx| moduli::omega_rate(ctx, &nat(k), &g))
}

fn certify(
    sc: *const ProxScenario,
    k: u64,
    g: *const c_char,
    search_cap: u64,
    omega: bool,
    holds: *mut bool,
    report_json: *mut *mut c_char,
) -> ProxStatus {
    clear_error();
    if holds.is_null() {
        set_error("null output pointer");
        return ProxStatus::NullArgument;
    }
    let sc = match unsafe { scenario(sc) } {
        Ok(sc) => sc,
        Err(status) => return status,
    };
    let g = match unsafe { required_str(g) }.map(CounterexampleFn::parse) {
        Ok(Ok(g)) => g,
        Ok(Err(e)) => {
            set_error(e.to_string());
            return ProxStatus::ConfigError;
        }
        Err(status) => return status,
    };
    let opts = VerifyOptions { search_cap, ..VerifyOptions::default() };
    let result = if omega {
        verify::certify_omega(sc, k, &g, &opts)
    } else {
        verify::certify_psi(sc, k, &g, &opts)
    };
    match result {
        Ok(report) => {
            unsafe { *holds = report.holds };
            if !report_json.is_null() {
                let json = serde_json::to_string(&report).expect("report serializes");
                unsafe { *report_json = own_string(json) };
            }
            ProxStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            ProxStatus::RuntimeError
        }
    }
}

/// Certify the Psi bound on one (k, g) trial. `g` uses the shorthand format.
/// Writes whether the trial holds into `holds`; when `report_json` is
/// non-null it receives the full trial report (caller-owned string).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_certify_psi(
    sc: *const ProxScenario,
    k: u64,
    g: *const c_char,
    search_cap: u64,
    holds: *mut bool,
    report_json: *mut *mut c_char,
) -> ProxStatus {
    certify(sc, k, g, search_cap, false, holds, report_json)
}

/// Certify the Omega bound on one (k, g) trial; see `prox_certify_psi`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn prox_certify_omega(
    sc: *const ProxScenario,
    k: u64,
    g: *const c_char,
    search_cap: u64,
    holds: *mut bool,
    report_json: *mut *mut c_char,
) -> ProxStatus {
    certify(sc, k, g, search_cap, true, holds, report_json)
}
