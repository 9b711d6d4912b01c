//! C ABI over `pomdp-kit`.
//!
//! Models and solutions are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns a status
//! code (`POMDP_OK` or a negative error code) and leaves a message readable via
//! `pomdp_last_error_message` on the calling thread. Indices crossing the ABI
//! (actions, observations) are 1-based.

use pomdp_kit::apps::presets::load_preset;
use pomdp_kit::filters::hmm_filter_step;
use pomdp_kit::solver::exact::{solve_finite_horizon, value_iteration_discounted, Method, SolveResult, DEFAULT_BUDGET};
use pomdp_kit::{Error, PomdpModel};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

pub const POMDP_OK: i32 = 0;
pub const POMDP_ERR_NON_STOCHASTIC_ROW: i32 = -1;
pub const POMDP_ERR_DIMENSION_MISMATCH: i32 = -2;
pub const POMDP_ERR_NEGATIVE_ENTRY: i32 = -3;
pub const POMDP_ERR_NON_INCREASING_LEVELS: i32 = -4;
pub const POMDP_ERR_UNSUPPORTED_EXACT: i32 = -5;
pub const POMDP_ERR_NOT_TP2: i32 = -6;
pub const POMDP_ERR_LP_INFEASIBLE: i32 = -7;
pub const POMDP_ERR_ORDERING_VIOLATION: i32 = -8;
pub const POMDP_ERR_LP_NUMERIC_FAILURE: i32 = -9;
pub const POMDP_ERR_ZERO_LIKELIHOOD: i32 = -10;
pub const POMDP_ERR_BLOWUP: i32 = -11;
pub const POMDP_ERR_INFEASIBLE: i32 = -12;
pub const POMDP_ERR_NO_MAXIMIZER: i32 = -13;
pub const POMDP_ERR_INVALID_PROBABILITY: i32 = -14;
pub const POMDP_ERR_NON_TRANSIENT: i32 = -15;
pub const POMDP_ERR_PRIOR_MASS_ON_STATE1: i32 = -16;
pub const POMDP_ERR_PRECONDITION_FAILED: i32 = -17;
pub const POMDP_ERR_NOT_MONOTONE: i32 = -18;
pub const POMDP_ERR_NOT_COMPARABLE: i32 = -19;
pub const POMDP_ERR_INVALID: i32 = -20;
/// A required pointer argument was null.
pub const POMDP_ERR_NULL_POINTER: i32 = -100;
/// A string argument was not valid UTF-8.
pub const POMDP_ERR_UTF8: i32 = -101;
/// The library panicked; the handle arguments should be considered unusable.
pub const POMDP_ERR_PANIC: i32 = -102;

/// Finite-horizon solver selectors for `pomdp_solve_finite`.
pub const POMDP_METHOD_INCREMENTAL_PRUNING: i32 = 0;
pub const POMDP_METHOD_MONAHAN: i32 = 1;

/// Opaque validated model.
pub struct PomdpModelHandle {
    model: PomdpModel,
}

/// Opaque solved value function.
pub struct PomdpSolutionHandle {
    result: SolveResult,
    x: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: &Error) -> i32 {
    set_error(e.to_json().to_string());
    e.code()
}

fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => POMDP_OK,
        Ok(Err(code)) => code,
        Err(_) => {
            set_error("panic inside pomdp-kit".into());
            POMDP_ERR_PANIC
        }
    }
}

fn lift<T>(r: pomdp_kit::Result<T>) -> Result<T, i32> {
    r.map_err(|e| fail(&e))
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, i32> {
    if s.is_null() {
        set_error("null string argument".into());
        return Err(POMDP_ERR_NULL_POINTER);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not UTF-8".into());
        POMDP_ERR_UTF8
    })
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, i32> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        POMDP_ERR_NULL_POINTER
    })
}

fn non_null<T>(p: *mut T) -> Result<(), i32> {
    if p.is_null() {
        set_error("null output pointer".into());
        return Err(POMDP_ERR_NULL_POINTER);
    }
    Ok(())
}

unsafe fn belief_arg<'a>(pi: *const f64, len: usize, x: usize) -> Result<&'a [f64], i32> {
    if pi.is_null() {
        set_error("null belief".into());
        return Err(POMDP_ERR_NULL_POINTER);
    }
    if len != x {
        return Err(fail(&Error::DimensionMismatch(format!("belief has {len} entries, model has {x} states"))));
    }
    let s = std::slice::from_raw_parts(pi, len);
    lift(pomdp_kit::model::check_belief(s))?;
    Ok(s)
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn pomdp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a model JSON document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_from_json(json: *const c_char, out: *mut *mut PomdpModelHandle) -> i32 {
    guard(|| {
        non_null(out)?;
        let model = lift(PomdpModel::from_json(str_arg(json)?))?;
        *out = Box::into_raw(Box::new(PomdpModelHandle { model }));
        Ok(())
    })
}

/// Loads a named preset that is a plain or embedded POMDP. `rho < 0` keeps the preset discount.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_preset(name: *const c_char, rho: f64, out: *mut *mut PomdpModelHandle) -> i32 {
    guard(|| {
        non_null(out)?;
        let rho = (rho >= 0.0).then_some(rho);
        let model = lift(load_preset(str_arg(name)?, rho).and_then(|p| p.to_pomdp()))?;
        *out = Box::into_raw(Box::new(PomdpModelHandle { model }));
        Ok(())
    })
}

/// Numbers of states, actions and observations.
///
/// # Safety
/// `model` must come from this library; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_dims(model: *const PomdpModelHandle, x: *mut usize, u: *mut usize, y: *mut usize) -> i32 {
    guard(|| {
        let m = &ref_arg(model)?.model;
        non_null(x)?;
        non_null(u)?;
        non_null(y)?;
        (*x, *u, *y) = (m.x, m.u, m.y);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_free(model: *mut PomdpModelHandle) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// One Bayes update after taking action `u` and observing `y` (both 1-based).
/// Writes the posterior to `out` (length X) and the normalizer to `sigma` if non-null.
///
/// # Safety
/// `pi` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pomdp_filter_step(
    model: *const PomdpModelHandle,
    pi: *const f64,
    len: usize,
    y: u32,
    u: u32,
    out: *mut f64,
    sigma: *mut f64,
) -> i32 {
    guard(|| {
        let m = &ref_arg(model)?.model;
        let pi = belief_arg(pi, len, m.x)?;
        non_null(out)?;
        let (y, u) = (y as usize, u as usize);
        if y == 0 || y > m.y || u == 0 || u > m.u {
            return Err(fail(&Error::Invalid(format!("observation {y} or action {u} out of range"))));
        }
        let step = lift(hmm_filter_step(pi, y - 1, u - 1, m))?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&step.posterior);
        if !sigma.is_null() {
            *sigma = step.sigma;
        }
        Ok(())
    })
}

/// Exact `horizon`-stage solve with one of the `POMDP_METHOD_*` selectors.
///
/// # Safety
/// `model` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn pomdp_solve_finite(model: *const PomdpModelHandle, horizon: usize, method: i32, out: *mut *mut PomdpSolutionHandle) -> i32 {
    guard(|| {
        let m = &ref_arg(model)?.model;
        non_null(out)?;
        let method = match method {
            POMDP_METHOD_INCREMENTAL_PRUNING => Method::IncrementalPruning,
            POMDP_METHOD_MONAHAN => Method::Monahan,
            k => return Err(fail(&Error::Invalid(format!("unknown method {k}")))),
        };
        let result = lift(solve_finite_horizon(m, horizon, method, DEFAULT_BUDGET))?;
        *out = Box::into_raw(Box::new(PomdpSolutionHandle { result, x: m.x }));
        Ok(())
    })
}

/// Discounted value iteration until the successive-iterate gap is below `eps`.
///
/// # Safety
/// `model` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn pomdp_solve_discounted(model: *const PomdpModelHandle, eps: f64, out: *mut *mut PomdpSolutionHandle) -> i32 {
    guard(|| {
        let m = &ref_arg(model)?.model;
        non_null(out)?;
        let result = lift(value_iteration_discounted(m, eps, DEFAULT_BUDGET, 100_000))?;
        *out = Box::into_raw(Box::new(PomdpSolutionHandle { result, x: m.x }));
        Ok(())
    })
}

/// Value and 1-based optimal first action at a belief.
///
/// # Safety
/// `pi` must point to `len` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pomdp_solution_query(sol: *const PomdpSolutionHandle, pi: *const f64, len: usize, value: *mut f64, action: *mut u32) -> i32 {
    guard(|| {
        let s = ref_arg(sol)?;
        let pi = belief_arg(pi, len, s.x)?;
        non_null(value)?;
        non_null(action)?;
        *value = s.result.value(pi);
        *action = (s.result.action(0, pi) + 1) as u32;
        Ok(())
    })
}

/// Error bound of a discounted solve (0 for finite horizon).
///
/// # Safety
/// `sol` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pomdp_solution_error_bound(sol: *const PomdpSolutionHandle) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.result.error_bound)
}

/// # Safety
/// `sol` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pomdp_solution_free(sol: *mut PomdpSolutionHandle) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
