use pomdp_ffi::*;
use pomdp_kit::Error;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    let p = pomdp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn preset(name: &str) -> *mut PomdpModelHandle {
    let name = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pomdp_model_preset(name.as_ptr(), -1.0, &mut h) }, POMDP_OK);
    h
}

#[test]
fn preset_solve_and_query() {
    let m = preset("machine-replacement");
    let (mut x, mut u, mut y) = (0, 0, 0);
    assert_eq!(unsafe { pomdp_model_dims(m, &mut x, &mut u, &mut y) }, POMDP_OK);
    assert_eq!((x, u, y), (2, 2, 2));
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { pomdp_solve_finite(m, 5, POMDP_METHOD_INCREMENTAL_PRUNING, &mut sol) }, POMDP_OK);
    let (mut v, mut a) = (0.0, 0);
    let pi = [0.5, 0.5];
    assert_eq!(unsafe { pomdp_solution_query(sol, pi.as_ptr(), 2, &mut v, &mut a) }, POMDP_OK);

    let model = pomdp_kit::apps::presets::load_preset("machine-replacement", None).unwrap().to_pomdp().unwrap();
    let direct = pomdp_kit::solver::exact::solve_finite_horizon(&model, 5, pomdp_kit::solver::exact::Method::IncrementalPruning, 100_000).unwrap();
    assert_eq!(v, direct.value(&pi));
    assert_eq!(a as usize, direct.action(0, &pi) + 1);
    assert_eq!(unsafe { pomdp_solution_error_bound(sol) }, 0.0);
    unsafe {
        pomdp_solution_free(sol);
        pomdp_model_free(m);
    }
}

#[test]
fn monahan_and_discounted() {
    let m = preset("machine-replacement");
    let mut s1 = ptr::null_mut();
    let mut s2 = ptr::null_mut();
    assert_eq!(unsafe { pomdp_solve_finite(m, 4, POMDP_METHOD_MONAHAN, &mut s1) }, POMDP_OK);
    assert_eq!(unsafe { pomdp_solve_discounted(m, 1e-4, &mut s2) }, POMDP_OK);
    // Bound is eps * rho / (1 - rho) at rho = 0.9.
    assert!((unsafe { pomdp_solution_error_bound(s2) } - 9e-4).abs() < 1e-12);
    unsafe {
        pomdp_solution_free(s1);
        pomdp_solution_free(s2);
        pomdp_model_free(m);
    }
}

#[test]
fn json_roundtrip_and_filter() {
    let json = CString::new(r#"{"X":2,"U":1,"Y":2,"P":[[[0.9,0.1],[0.2,0.8]]],"B":[[[0.8,0.2],[0.3,0.7]]],"c":[[1],[2]],"rho":0.9}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pomdp_model_from_json(json.as_ptr(), &mut m) }, POMDP_OK);
    let pi = [0.5, 0.5];
    let mut out = [0.0; 2];
    let mut sigma = 0.0;
    assert_eq!(unsafe { pomdp_filter_step(m, pi.as_ptr(), 2, 1, 1, out.as_mut_ptr(), &mut sigma) }, POMDP_OK);
    // Predicted (0.55, 0.45), then Bayes with column 1 of B.
    let s = 0.55 * 0.8 + 0.45 * 0.3;
    assert!((sigma - s).abs() < 1e-12);
    assert!((out[0] - 0.44 / s).abs() < 1e-12);
    assert_eq!(unsafe { pomdp_filter_step(m, pi.as_ptr(), 2, 3, 1, out.as_mut_ptr(), &mut sigma) }, POMDP_ERR_INVALID);
    unsafe { pomdp_model_free(m) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new(r#"{"X":2,"U":1,"Y":2,"P":[[[0.9,0.3],[0.2,0.8]]],"B":[[[0.8,0.2],[0.3,0.7]]],"c":[[1],[2]],"rho":0.9}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pomdp_model_from_json(bad.as_ptr(), &mut m) }, POMDP_ERR_NON_STOCHASTIC_ROW);
    assert!(m.is_null());
    assert!(last_error().contains("NonStochasticRow"));

    let name = CString::new("no-such-preset").unwrap();
    assert_eq!(unsafe { pomdp_model_preset(name.as_ptr(), -1.0, &mut m) }, POMDP_ERR_INVALID);
    assert_eq!(unsafe { pomdp_model_from_json(ptr::null(), &mut m) }, POMDP_ERR_NULL_POINTER);
    let mut x = 0;
    assert_eq!(unsafe { pomdp_model_dims(ptr::null(), &mut x, &mut x, &mut x) }, POMDP_ERR_NULL_POINTER);

    let h = preset("machine-replacement");
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { pomdp_solve_finite(h, 2, 7, &mut sol) }, POMDP_ERR_INVALID);
    assert_eq!(unsafe { pomdp_solve_finite(h, 2, POMDP_METHOD_MONAHAN, &mut sol) }, POMDP_OK);
    assert!(pomdp_last_error_message().is_null());
    let (mut v, mut a) = (0.0, 0);
    let short = [1.0];
    assert_eq!(unsafe { pomdp_solution_query(sol, short.as_ptr(), 1, &mut v, &mut a) }, POMDP_ERR_DIMENSION_MISMATCH);
    let neg = [1.5, -0.5];
    assert_eq!(unsafe { pomdp_solution_query(sol, neg.as_ptr(), 2, &mut v, &mut a) }, POMDP_ERR_INVALID_PROBABILITY);
    unsafe {
        pomdp_solution_free(sol);
        pomdp_model_free(h);
        pomdp_model_free(ptr::null_mut());
    }
}

#[test]
fn constants_match_library_codes() {
    assert_eq!(Error::NonTransient.code(), POMDP_ERR_NON_TRANSIENT);
    assert_eq!(Error::NotComparable.code(), POMDP_ERR_NOT_COMPARABLE);
    assert_eq!(Error::NoMaximizer.code(), POMDP_ERR_NO_MAXIMIZER);
    assert_eq!(Error::PriorMassOnState1.code(), POMDP_ERR_PRIOR_MASS_ON_STATE1);
    assert_eq!(Error::Invalid(String::new()).code(), POMDP_ERR_INVALID);
    assert_eq!(Error::ZeroLikelihood(0.0).code(), POMDP_ERR_ZERO_LIKELIHOOD);
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pomdp.h")).unwrap();
    for sym in ["pomdp_model_from_json", "pomdp_solve_finite", "pomdp_solution_query", "pomdp_last_error_message", "typedef struct PomdpModelHandle", "POMDP_ERR_PANIC"] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}
