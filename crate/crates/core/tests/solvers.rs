use pomdp_kit::apps::machine::build_machine_replacement;
use pomdp_kit::bounds::{rank1_bounds, sandwich_filter};
use pomdp_kit::filters::simulate_trajectory;
use pomdp_kit::model::{rng, sample_index, sample_simplex, sample_stochastic, Matrix, PomdpModel};
use pomdp_kit::orders::random_tp2;
use pomdp_kit::solver::exact::{solve_finite_horizon, value_iteration_discounted, value_iteration_n, Method, DEFAULT_BUDGET};
use pomdp_kit::solver::grid::{grid_value_oracle, Horizon};
use pomdp_kit::solver::lovejoy::lovejoy_bounds;
use proptest::prelude::*;

fn random_model(seed: u64, x: usize, u: usize, y: usize, rho: f64) -> PomdpModel {
    let mut r = rng(seed);
    let p = (0..u).map(|_| sample_stochastic(&mut r, x, x)).collect();
    let b = (0..u).map(|_| sample_stochastic(&mut r, x, y)).collect();
    let c = sample_stochastic(&mut r, x, u);
    PomdpModel::new(p, b, c, rho).unwrap()
}

#[test]
fn pruning_methods_agree_on_random_models() {
    for seed in 0..6 {
        let (x, u, y) = if seed % 2 == 0 { (2, 2, 2) } else { (3, 2, 2) };
        let m = random_model(seed, x, u, y, 0.9);
        let ip = solve_finite_horizon(&m, 4, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
        let mo = solve_finite_horizon(&m, 4, Method::Monahan, DEFAULT_BUDGET).unwrap();
        let mut r = rng(100 + seed);
        for _ in 0..300 {
            let pi = sample_simplex(&mut r, x);
            assert!((ip.value(&pi) - mo.value(&pi)).abs() < 1e-9);
        }
    }
}

#[test]
fn exact_matches_grid_oracle_on_two_states() {
    let m = build_machine_replacement(0.2, 0.9, 0.8, 4.0, [3.0, 0.0], 0.9).unwrap();
    let exact = solve_finite_horizon(&m, 6, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
    let (solver, sol) = grid_value_oracle(&m, 2000, Horizon::Finite(6)).unwrap();
    for k in 0..=100 {
        let t = k as f64 / 100.0;
        let pi = [1.0 - t, t];
        assert!((exact.value(&pi) - solver.value(&sol, &pi)).abs() < 5e-3, "at {t}");
    }
}

#[test]
fn lovejoy_bounds_bracket_the_exact_value() {
    let m = random_model(7, 3, 2, 3, 0.9);
    let exact = solve_finite_horizon(&m, 4, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
    let lb = lovejoy_bounds(&m, 4, 8);
    let mut r = rng(3);
    for _ in 0..300 {
        let pi = sample_simplex(&mut r, 3);
        let v = exact.value(&pi);
        assert!(lb.upper_value(&pi) >= v - 1e-9);
        assert!(lb.lower_value(&pi) <= v + 1e-9);
    }
}

#[test]
fn discounted_iterates_respect_the_error_bound() {
    let m = build_machine_replacement(0.2, 0.9, 0.8, 4.0, [3.0, 0.0], 0.9).unwrap();
    let reference = value_iteration_n(&m, 200, DEFAULT_BUDGET).unwrap();
    let cmax = m.max_abs_cost();
    for n in [5, 10, 20] {
        let v = value_iteration_n(&m, n, DEFAULT_BUDGET).unwrap();
        let bound = m.rho.powi(n as i32 + 1) * cmax / (1.0 - m.rho);
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            let pi = [1.0 - t, t];
            assert!((v.value(&pi) - reference.value(&pi)).abs() <= bound + 1e-9);
        }
    }
    let sol = value_iteration_discounted(&m, 1e-6, DEFAULT_BUDGET, 10_000).unwrap();
    assert!((sol.value(&[0.5, 0.5]) - reference.value(&[0.5, 0.5])).abs() <= sol.error_bound + 1e-9);
}

#[test]
fn sandwich_holds_on_tp2_chains() {
    for seed in 0..4 {
        let mut r = rng(seed);
        let p = random_tp2(&mut r, 5, 5);
        let b = random_tp2(&mut r, 5, 4);
        let (lo, hi) = rank1_bounds(&p).unwrap();
        let mut x = sample_index(&mut r, &[0.2; 5]);
        let obs: Vec<usize> = (0..500)
            .map(|_| {
                x = sample_index(&mut r, p.row(x));
                sample_index(&mut r, b.row(x))
            })
            .collect();
        let run = sandwich_filter(&lo, &p, &hi, &b, &obs, &[0.2; 5]).unwrap();
        assert_eq!((run.mean_violations, run.map_violations), (0, 0));
        assert_eq!(run.steps.len(), 501);
    }
}

#[test]
fn simulation_is_seeded_and_tracks_noiseless_chains() {
    let m = random_model(2, 3, 2, 2, 0.9);
    let pol = |k: usize, _: &[f64]| k % 2;
    let a = simulate_trajectory(&m, &[0.3, 0.3, 0.4], &pol, 50, 9).unwrap();
    let b = simulate_trajectory(&m, &[0.3, 0.3, 0.4], &pol, 50, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());

    let shift = Matrix::new(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
    let det = PomdpModel::new(vec![shift.clone()], vec![Matrix::identity(3)], Matrix::zeros(3, 1), 0.9).unwrap();
    let t = simulate_trajectory(&det, &[1.0, 0.0, 0.0], &|_, _| 0, 10, 1).unwrap();
    for (x, pi) in t.states.iter().zip(&t.beliefs) {
        assert_eq!(pi[*x], 1.0);
    }
}

#[test]
fn visit_frequencies_match_stationary_distribution() {
    let p = Matrix::new(&[[0.9, 0.1], [0.3, 0.7]]);
    let m = PomdpModel::new(vec![p], vec![Matrix::filled(2, 2, 0.5)], Matrix::zeros(2, 1), 0.9).unwrap();
    let t = simulate_trajectory(&m, &[0.5, 0.5], &|_, _| 0, 100_000, 4).unwrap();
    let freq = t.states.iter().filter(|&&x| x == 1).count() as f64 / t.states.len() as f64;
    // Stationary mass on state 2 is 0.1 / 0.4; the chain mixes in a few steps.
    let se = (0.25 * 0.75 / 100_000.0f64).sqrt() * 3.0;
    assert!((freq - 0.25).abs() < 3.0 * se, "{freq}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn value_function_is_concave(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0, w in 0.0f64..1.0) {
        let m = random_model(seed, 2, 2, 2, 0.8);
        let s = solve_finite_horizon(&m, 3, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
        let v = |t: f64| s.value(&[1.0 - t, t]);
        let mid = w * a + (1.0 - w) * b;
        prop_assert!(v(mid) >= w * v(a) + (1.0 - w) * v(b) - 1e-9);
    }
}
