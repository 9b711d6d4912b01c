use pomdp_kit::apps::machine::build_machine_replacement;
use pomdp_kit::apps::presets::{load_preset, Preset, PRESET_NAMES};
use pomdp_kit::apps::quickest::build_classical_detection;
use pomdp_kit::model::{rng, sample_index, Matrix};
use pomdp_kit::solver::exact::{solve_finite_horizon, Method, DEFAULT_BUDGET};
use pomdp_kit::solver::grid::{GridSolver, Interp};
use pomdp_kit::structural::{extract_thresholds_2state, transmission_policy_check};

#[test]
fn every_preset_loads() {
    for name in PRESET_NAMES {
        let p = load_preset(name, None).unwrap_or_else(|e| panic!("{name}: {e}"));
        if let Preset::Pomdp(m) = &p {
            assert!(m.p.iter().chain(&m.b).all(Matrix::is_stochastic), "{name}");
        }
        match &p {
            Preset::Pomdp(_) | Preset::Sampling(_) => {
                p.to_pomdp().unwrap();
            }
            // Only linear stop costs embed; the variance-penalized preset stays a stopping model.
            Preset::Detection(q) => assert_eq!(p.to_pomdp().is_ok(), q.params.alpha == 0.0, "{name}"),
            _ => {}
        }
    }
    assert!(load_preset("example4(0.1,0.4)", Some(0.5)).is_ok());
    assert!(load_preset("example4:0.1,0.6", None).is_err());
    assert!(load_preset("example4(0.1)", None).is_err());
}

#[test]
fn machine_replacement_policy_is_a_threshold() {
    let m = build_machine_replacement(0.2, 0.9, 0.8, 4.0, [3.0, 0.0], 0.9).unwrap();
    let s = solve_finite_horizon(&m, 8, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
    let pol = |pi: &[f64]| s.action(0, pi);
    // State 2 is the working state: replace (action 1) when π(2) is small.
    let jumps = extract_thresholds_2state(&pol, 1000).unwrap();
    assert_eq!(pol(&[1.0, 0.0]), 0);
    assert!(jumps.len() <= 1);
}

#[test]
fn detection_transform_keeps_the_policy() {
    let q = build_classical_detection(0.9, Matrix::new(&[[0.7, 0.3], [0.3, 0.7]]), 0.05).unwrap();
    let t = q.transformed().unwrap();
    let a = GridSolver::new(&q.model, 400, Interp::Linear);
    let b = GridSolver::new(&t, 400, Interp::Linear);
    let sa = a.solve_finite(60);
    let sb = b.solve_finite(60);
    let mut mismatches = 0;
    for (k, node) in a.grid.nodes.iter().enumerate() {
        // Values differ by the linear term (α+β)f'π with f = e_2.
        assert!((sa.values[k] - sb.values[k] - node[1]).abs() < 1e-9, "{k}");
        mismatches += usize::from(sa.policy[k] != sb.policy[k]);
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn absorption_pmf_matches_simulation() {
    let q = match load_preset("qd-ph", None).unwrap() {
        Preset::Detection(q) => q,
        _ => unreachable!(),
    };
    let pmf = q.absorption_pmf(8);
    assert!(pmf.iter().all(|v| *v >= 0.0) && pmf.iter().sum::<f64>() <= 1.0 + 1e-12);
    let runs = 100_000;
    let mut hits = [0usize; 9];
    let mut r = rng(11);
    for _ in 0..runs {
        let mut x = sample_index(&mut r, &q.pi0);
        for k in 0..9 {
            if x == 0 {
                hits[k] += 1;
                break;
            }
            x = sample_index(&mut r, q.model.p.row(x));
        }
    }
    for k in 0..9 {
        let f = hits[k] as f64 / runs as f64;
        let se = (pmf[k] * (1.0 - pmf[k]) / runs as f64).sqrt().max(1e-6);
        assert!((f - pmf[k]).abs() < 4.0 * se, "k={k}: {f} vs {}", pmf[k]);
    }
}

#[test]
fn transmission_preset_has_monotone_structure() {
    let t = match load_preset("transmission", None).unwrap() {
        Preset::Transmission(t) => t,
        _ => unreachable!(),
    };
    let (report, sol) = transmission_policy_check(&t);
    assert!(report.terminal_increasing && report.terminal_convex && report.threshold_asserted);
    assert!(report.decreasing_in_slots.is_holds());
    assert!(report.threshold_in_buffer.is_holds());
    assert_eq!(sol.values.len(), t.slots + 1);
}

#[test]
fn search_rows_and_absorption() {
    let m = load_preset("search", None).unwrap().to_pomdp().unwrap();
    assert_eq!((m.x, m.y), (5, 3));
    for u in 0..m.u {
        assert_eq!(m.p[u].row(4), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    }
}
