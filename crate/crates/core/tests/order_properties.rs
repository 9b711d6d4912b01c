use pomdp_kit::filters::{filter_with, hmm_filter_step, normalizer_vector};
use pomdp_kit::model::{rng, sample_stochastic, Matrix, PomdpModel};
use pomdp_kit::orders::{fosd_compare, is_tp2, mlr_compare, random_tp2, Comparison};
use proptest::prelude::*;

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|a| a / s).collect()
}

/// `(π1, π2)` with `π1 ≥r π2`: `π1 ∝ r ⊙ π2` for an increasing ratio `r`.
fn mlr_pair(x: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(0.01f64..1.0, x), prop::collection::vec(0.01f64..3.0, x)).prop_map(|(base, mut r)| {
        r.sort_by(f64::total_cmp);
        let p2 = normalized(base);
        let p1 = normalized(p2.iter().zip(&r).map(|(a, b)| a * b).collect());
        (p1, p2)
    })
}

fn belief(x: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, x).prop_map(normalized)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn mlr_implies_fosd((p1, p2) in (2usize..7).prop_flat_map(mlr_pair)) {
        prop_assert!(mlr_compare(&p1, &p2).unwrap().ge());
        prop_assert!(fosd_compare(&p1, &p2).unwrap().ge());
    }

    #[test]
    fn bayes_preserves_mlr((p1, p2, l) in (2usize..7).prop_flat_map(|x| (mlr_pair(x), prop::collection::vec(0.01f64..0.99, x))).prop_map(|((a, b), l)| (a, b, l))) {
        let x = p1.len();
        let b = Matrix::from_rows(&l.iter().map(|v| vec![*v, 1.0 - v]).collect::<Vec<_>>()).unwrap();
        let id = Matrix::identity(x);
        for y in 0..2 {
            let t1 = filter_with(&id, &b, &p1, y).unwrap().posterior;
            let t2 = filter_with(&id, &b, &p2, y).unwrap().posterior;
            prop_assert!(mlr_compare(&t1, &t2).unwrap().ge());
        }
    }

    #[test]
    fn mlr_transitive(x in 2usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut chain: Vec<Vec<f64>> = Vec::new();
        let mut cur = pomdp_kit::model::sample_simplex(&mut r, x);
        for _ in 0..3 {
            chain.push(cur.clone());
            let mut ratio: Vec<f64> = (0..x).map(|_| rand::Rng::random_range(&mut r, 0.1..2.0)).collect();
            ratio.sort_by(f64::total_cmp);
            cur = normalized(cur.iter().zip(&ratio).map(|(a, b)| a * b).collect());
        }
        prop_assert!(mlr_compare(&chain[2], &chain[0]).unwrap().ge());
    }

    #[test]
    fn tp2_product_closed(seed in any::<u64>(), x in 2usize..6) {
        let mut r = rng(seed);
        let m = random_tp2(&mut r, x, x);
        let n = random_tp2(&mut r, x, x);
        prop_assert!(is_tp2(&m).is_holds() && is_tp2(&n).is_holds());
        prop_assert!(is_tp2(&m.mul(&n)).is_holds());
        // First column of a TP2 stochastic matrix is nonincreasing.
        for i in 1..x {
            prop_assert!(m[(i, 0)] <= m[(i - 1, 0)] + 1e-12);
        }
    }

    #[test]
    fn filter_monotone_under_tp2((p1, p2) in mlr_pair(4), seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_tp2(&mut r, 4, 4);
        let b = random_tp2(&mut r, 4, 3);
        for y in 0..3 {
            let t1 = filter_with(&p, &b, &p1, y).unwrap().posterior;
            let t2 = filter_with(&p, &b, &p2, y).unwrap().posterior;
            prop_assert!(mlr_compare(&t1, &t2).unwrap().ge());
        }
        // Larger observations give MLR-larger posteriors.
        for y in 1..3 {
            let hi = filter_with(&p, &b, &p1, y).unwrap().posterior;
            let lo = filter_with(&p, &b, &p1, y - 1).unwrap().posterior;
            prop_assert!(mlr_compare(&hi, &lo).unwrap().ge());
        }
    }

    #[test]
    fn filter_output_is_a_belief(pi in belief(3), seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = sample_stochastic(&mut r, 3, 3);
        let b = sample_stochastic(&mut r, 3, 4);
        let model = PomdpModel::new(vec![p.clone()], vec![b.clone()], Matrix::zeros(3, 1), 0.9).unwrap();
        let sigma = normalizer_vector(&pi, 0, &model).unwrap();
        prop_assert!((sigma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let pred = p.tmul_vec(&pi);
        for y in 0..4 {
            let s = hmm_filter_step(&pi, y, 0, &model).unwrap();
            prop_assert!((s.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(s.posterior.iter().all(|v| *v >= 0.0));
            let direct: f64 = (0..3).map(|i| b[(i, y)] * pred[i]).sum();
            prop_assert!((s.sigma - direct).abs() < 1e-12);
            prop_assert!((s.sigma - sigma[y]).abs() < 1e-12);
        }
    }
}

#[test]
fn fosd_not_closed_under_bayes() {
    let t = 1.0 / 3.0;
    let (p1, p2, p3) = ([t, t, t], [0.0, 2.0 * t, t], [0.0, t, 2.0 * t]);
    assert_eq!(fosd_compare(&p1, &p2).unwrap(), Comparison::LE);
    let b = Matrix::new(&[[0.0, 1.0], [0.5, 0.5], [0.5, 0.5]]);
    let id = Matrix::identity(3);
    let t1 = filter_with(&id, &b, &p1, 0).unwrap().posterior;
    let t2 = filter_with(&id, &b, &p2, 0).unwrap().posterior;
    let t3 = filter_with(&id, &b, &p3, 0).unwrap().posterior;
    assert_eq!(t1, vec![0.0, 0.5, 0.5]);
    assert!((t2[1] - 2.0 * t).abs() < 1e-15 && (t2[2] - t).abs() < 1e-15);
    assert_eq!(fosd_compare(&t1, &t2).unwrap(), Comparison::GE);
    assert_eq!(mlr_compare(&p1, &p3).unwrap(), Comparison::LE);
    assert_eq!(mlr_compare(&t1, &t3).unwrap(), Comparison::LE);
}

#[test]
fn illustrative_example_values() {
    let p1 = Matrix::new(&[[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.1, 0.3, 0.6]]);
    let p2 = Matrix::new(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
    let (a, b) = ([0.2, 0.2, 0.6], [0.3, 0.2, 0.5]);
    assert_eq!(mlr_compare(&a, &b).unwrap(), Comparison::GE);
    let round4 = |v: f64| (v * 1e4).round() / 1e4;
    let (qa, qb) = (p1.tmul_vec(&a), p1.tmul_vec(&b));
    let ratio: Vec<f64> = qa.iter().zip(&qb).map(|(x, y)| round4(x / y)).collect();
    assert_eq!(ratio, vec![0.8148, 1.0, 1.1282]);
    let (qa, qb) = (p2.tmul_vec(&a), p2.tmul_vec(&b));
    assert_eq!(mlr_compare(&qa, &qb).unwrap(), Comparison::Incomparable);
    let ratio: Vec<f64> = qa.iter().zip(&qb).map(|(x, y)| round4(x / y)).collect();
    assert_eq!(ratio, vec![1.0, 0.6667, 1.2]);

    let m = PomdpModel::new(vec![p1.clone()], vec![p1.clone()], Matrix::zeros(3, 1), 0.9).unwrap();
    let s1: Vec<f64> = normalizer_vector(&a, 0, &m).unwrap().into_iter().map(round4).collect();
    let s2: Vec<f64> = normalizer_vector(&b, 0, &m).unwrap().into_iter().map(round4).collect();
    assert_eq!(s1, vec![0.2440, 0.3680, 0.3880]);
    assert_eq!(s2, vec![0.2690, 0.3680, 0.3630]);
    let y1: Vec<f64> = hmm_filter_step(&a, 0, 0, &m).unwrap().posterior.into_iter().map(round4).collect();
    let y2: Vec<f64> = hmm_filter_step(&a, 1, 0, &m).unwrap().posterior.into_iter().map(round4).collect();
    assert_eq!(y1, vec![0.5410, 0.2787, 0.1803]);
    assert_eq!(y2, vec![0.1793, 0.4620, 0.3587]);
    // Expected cost with c = (3, 2, 1) decreases in the observation.
    let c = [3.0, 2.0, 1.0];
    let costs: Vec<f64> = (0..3).map(|y| pomdp_kit::model::dot(&c, &hmm_filter_step(&a, y, 0, &m).unwrap().posterior)).collect();
    assert!(costs[0] > costs[1] && costs[1] > costs[2]);
}
