//! C interface to clocksim.
//!
//! Experiments are parsed into an opaque [`ClocksimSpec`] handle. Every
//! fallible call returns a [`ClocksimStatus`]; on failure the message is
//! available from [`clocksim_last_error_message`] on the same thread.
//! Pure formula helpers take and return plain doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clocksim::dsl::{parse_spec, render_diagnostics, to_dsl, SequenceSource};
use clocksim::engine::{run_engine, Engine};
use clocksim::model::{bloch_partition, presets, ExperimentSpec};
use clocksim::observables::{
    observables, port_probability, probability_difference, total_ground_probability, visibility,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClocksimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    EngineError = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClocksimEngine {
    Perturbative = 0,
    Nonperturbative = 1,
    LatticeOde = 2,
}

// Enum arguments arrive as plain integers so an out-of-range value from C is
// an error rather than undefined behaviour.
fn engine_from(raw: u32) -> Result<Engine, ClocksimStatus> {
    match raw {
        x if x == ClocksimEngine::Perturbative as u32 => Ok(Engine::Perturbative),
        x if x == ClocksimEngine::Nonperturbative as u32 => Ok(Engine::Nonperturbative),
        x if x == ClocksimEngine::LatticeOde as u32 => Ok(Engine::LatticeOde),
        other => Err(fail(ClocksimStatus::InvalidArgument, format!("unknown engine {other}"))),
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClocksimPreset {
    /// 88Sr in a 532 nm lattice, 10 um separation, 1 s hold.
    Strontium = 0,
    /// Reduced units with eps_k = eps_g = 0.01.
    ReducedDemo = 1,
}

/// Opaque experiment handle.
pub struct ClocksimSpec {
    spec: ExperimentSpec,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClocksimClockPhases {
    pub delta_phi: f64,
    pub delta_d: f64,
    pub delta_u: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClocksimObservables {
    pub delta_phi: f64,
    pub delta_d: f64,
    pub delta_u: f64,
    pub delta_split: f64,
    pub p0: f64,
    pub p1: f64,
    pub total: f64,
    pub total_normalized: f64,
    pub difference: f64,
    pub visibility: f64,
    pub visibility_drop: f64,
    pub mean_omega0: f64,
    pub fractional_shift: f64,
    pub eps_k: f64,
    pub eps_g: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClocksimEpsilons {
    pub eps_k: f64,
    pub eps_g: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClocksimPartition {
    pub n: u64,
    pub tau: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: ClocksimStatus, msg: impl Into<String>) -> ClocksimStatus {
    set_error(msg);
    status
}

/// Runs `f` with errors cleared and panics turned into [`ClocksimStatus::Panic`].
fn guarded(f: impl FnOnce() -> ClocksimStatus) -> ClocksimStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(ClocksimStatus::Panic, format!("internal error: {msg}"))
        }
    }
}

unsafe fn spec_ref<'a>(handle: *const ClocksimSpec) -> Result<&'a ExperimentSpec, ClocksimStatus> {
    handle
        .as_ref()
        .map(|h| &h.spec)
        .ok_or_else(|| fail(ClocksimStatus::NullPointer, "spec handle is null"))
}

fn boxed(spec: ExperimentSpec) -> *mut ClocksimSpec {
    Box::into_raw(Box::new(ClocksimSpec { spec }))
}

/// Parses sequence text into a new handle written to `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer. The
/// handle must be released with [`clocksim_spec_free`].
#[no_mangle]
pub unsafe extern "C" fn clocksim_spec_parse(text: *const c_char, out: *mut *mut ClocksimSpec) -> ClocksimStatus {
    guarded(|| {
        if text.is_null() || out.is_null() {
            return fail(ClocksimStatus::NullPointer, "text and out must not be null");
        }
        *out = ptr::null_mut();
        let Ok(s) = CStr::from_ptr(text).to_str() else {
            return fail(ClocksimStatus::InvalidUtf8, "sequence text is not UTF-8");
        };
        let src = SequenceSource::inline(s);
        match parse_spec(&src) {
            Ok(v) => {
                *out = boxed(v.spec);
                ClocksimStatus::Ok
            }
            Err(diags) => fail(ClocksimStatus::ParseError, render_diagnostics(&src, &diags).trim_end()),
        }
    })
}

/// Creates a handle for a built-in experiment, one of [`ClocksimPreset`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clocksim_spec_preset(preset: u32, out: *mut *mut ClocksimSpec) -> ClocksimStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ClocksimStatus::NullPointer, "out must not be null");
        }
        let spec = match preset {
            x if x == ClocksimPreset::Strontium as u32 => presets::strontium(),
            x if x == ClocksimPreset::ReducedDemo as u32 => presets::reduced_demo(0.01, 0.01),
            other => return fail(ClocksimStatus::InvalidArgument, format!("unknown preset {other}")),
        };
        *out = boxed(spec);
        ClocksimStatus::Ok
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn clocksim_spec_free(handle: *mut ClocksimSpec) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Sets the lattice hold `T_B`.
///
/// # Safety
/// `handle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn clocksim_spec_set_hold(handle: *mut ClocksimSpec, t_b: f64) -> ClocksimStatus {
    guarded(|| {
        let Some(h) = handle.as_mut() else {
            return fail(ClocksimStatus::NullPointer, "spec handle is null");
        };
        if !(t_b > 0.0 && t_b.is_finite()) {
            return fail(ClocksimStatus::InvalidArgument, format!("T_B must be positive and finite, got {t_b}"));
        }
        h.spec.timing.t_b = t_b;
        ClocksimStatus::Ok
    })
}

/// Writes the canonical sequence text to `*out`. Free it with
/// [`clocksim_string_free`].
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clocksim_spec_to_text(handle: *const ClocksimSpec, out: *mut *mut c_char) -> ClocksimStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ClocksimStatus::NullPointer, "out must not be null");
        }
        *out = ptr::null_mut();
        let spec = match spec_ref(handle) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match CString::new(to_dsl(spec)) {
            Ok(c) => {
                *out = c.into_raw();
                ClocksimStatus::Ok
            }
            Err(_) => fail(ClocksimStatus::Panic, "sequence text contains NUL"),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn clocksim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn run(spec: &ExperimentSpec, engine: u32) -> Result<clocksim::phase::ClockPhases, ClocksimStatus> {
    run_engine(spec, engine_from(engine)?)
        .map(|r| r.phases)
        .map_err(|e| fail(ClocksimStatus::EngineError, e.to_string()))
}

/// Clock phases `(delta_phi, delta_d, delta_u)` from `engine`, one of
/// [`ClocksimEngine`].
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clocksim_clock_phases(
    handle: *const ClocksimSpec,
    engine: u32,
    out: *mut ClocksimClockPhases,
) -> ClocksimStatus {
    guarded(|| {
        let spec = match spec_ref(handle) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let Some(out) = out.as_mut() else {
            return fail(ClocksimStatus::NullPointer, "out must not be null");
        };
        match run(spec, engine) {
            Ok(p) => {
                *out = ClocksimClockPhases {
                    delta_phi: p.delta_phi.to_f64(),
                    delta_d: p.delta_d.to_f64(),
                    delta_u: p.delta_u.to_f64(),
                };
                ClocksimStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Every observable of one run.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clocksim_observables(
    handle: *const ClocksimSpec,
    engine: u32,
    out: *mut ClocksimObservables,
) -> ClocksimStatus {
    guarded(|| {
        let spec = match spec_ref(handle) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let Some(out) = out.as_mut() else {
            return fail(ClocksimStatus::NullPointer, "out must not be null");
        };
        let phases = match run(spec, engine) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let o = observables(spec, &phases);
        *out = ClocksimObservables {
            delta_phi: o.delta_phi,
            delta_d: o.delta_d,
            delta_u: o.delta_u,
            delta_split: o.delta_split,
            p0: o.p0,
            p1: o.p1,
            total: o.total,
            total_normalized: o.total_normalized,
            difference: o.difference,
            visibility: o.visibility,
            visibility_drop: o.visibility_drop,
            mean_omega0: o.mean_omega0,
            fractional_shift: o.fractional_shift,
            eps_k: o.eps_k,
            eps_g: o.eps_g,
        };
        ClocksimStatus::Ok
    })
}

/// Kinetic and gravitational correction sizes.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clocksim_epsilon_params(handle: *const ClocksimSpec, out: *mut ClocksimEpsilons) -> ClocksimStatus {
    guarded(|| {
        let spec = match spec_ref(handle) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let Some(out) = out.as_mut() else {
            return fail(ClocksimStatus::NullPointer, "out must not be null");
        };
        let e = spec.epsilons();
        *out = ClocksimEpsilons { eps_k: e.eps_k, eps_g: e.eps_g };
        ClocksimStatus::Ok
    })
}

/// Splits `t_b` into `n` whole periods `tau_b` plus a residual in
/// `[-tau_b/2, tau_b/2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clocksim_bloch_partition(t_b: f64, tau_b: f64, out: *mut ClocksimPartition) -> ClocksimStatus {
    guarded(|| {
        let Some(out) = out.as_mut() else {
            return fail(ClocksimStatus::NullPointer, "out must not be null");
        };
        if !(t_b >= 0.0 && t_b.is_finite() && tau_b > 0.0 && tau_b.is_finite()) {
            return fail(
                ClocksimStatus::InvalidArgument,
                format!("need finite T_B >= 0 and tau_B > 0, got {t_b} and {tau_b}"),
            );
        }
        let p = bloch_partition(t_b, tau_b);
        *out = ClocksimPartition { n: p.n, tau: p.tau };
        ClocksimStatus::Ok
    })
}

/// Ground-state probability at port `j` (0 or 1; other values count as 1).
#[no_mangle]
pub extern "C" fn clocksim_port_probability(delta_phi: f64, delta_d: f64, delta_u: f64, j: u8) -> f64 {
    port_probability(delta_phi, delta_d, delta_u, j.min(1))
}

#[no_mangle]
pub extern "C" fn clocksim_total_ground_probability(delta_d: f64, delta_u: f64) -> f64 {
    total_ground_probability(delta_d, delta_u)
}

/// `P^(0) - P^(1)`.
#[no_mangle]
pub extern "C" fn clocksim_probability_difference(delta_phi: f64, delta_d: f64, delta_u: f64) -> f64 {
    probability_difference(delta_phi, delta_d, delta_u)
}

#[no_mangle]
pub extern "C" fn clocksim_visibility(eps_g: f64, omega0: f64, t_b: f64) -> f64 {
    visibility(eps_g, omega0, t_b)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn clocksim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn clocksim_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
