//! Numerical verification of structural properties on concrete models.

use crate::apps::transmission::{TransmissionMdp, TransmissionSolution};
use crate::error::{Error, Result};
use crate::model::{dot, rng, sample_simplex, unit, Matrix, Mdp, PomdpModel, StopCost, StoppingModel};
use crate::orders::{
    blackwell_factorize, check_f4, copositive_full_matrices, copositive_order_full, copositive_order_transitions, fosd_compare,
    is_tp2, mdp_monotone_report, simplex_grid, CopositiveMethod, MonotoneVariant, OrderVerdict, Status, Witness, ORDER_TOL,
};
use crate::solver::exact::{solve_finite_horizon, Method, DEFAULT_BUDGET};
use rand::Rng as _;
use serde::Serialize;

/// Tolerance on value comparisons.
pub const VALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    #[serde(rename = "C")]
    pub c: OrderVerdict,
    #[serde(rename = "F1")]
    pub f1: OrderVerdict,
    #[serde(rename = "F2")]
    pub f2: OrderVerdict,
    #[serde(rename = "F3")]
    pub f3: OrderVerdict,
    #[serde(rename = "F3'")]
    pub f3_prime: OrderVerdict,
    #[serde(rename = "F4")]
    pub f4: OrderVerdict,
    #[serde(rename = "S")]
    pub s: OrderVerdict,
}

impl AssumptionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn cost_decreasing(c: &Matrix) -> OrderVerdict {
    for u in 0..c.cols() {
        for i in 0..c.rows() - 1 {
            if c[(i + 1, u)] > c[(i, u)] + ORDER_TOL {
                return OrderVerdict::fails_at(vec![i + 1, i + 2, u + 1]);
            }
        }
    }
    OrderVerdict::holds()
}

/// Linear submodularity: `c(1,u+1) − c(1,u) ≥ c(x,u+1) − c(x,u) ≥ c(X,u+1) − c(X,u)`.
fn linear_submodular(c: &Matrix) -> OrderVerdict {
    let x = c.rows();
    for u in 0..c.cols().saturating_sub(1) {
        let d = |i: usize| c[(i, u + 1)] - c[(i, u)];
        if let Some(i) = (0..x).find(|&i| d(i) > d(0) + ORDER_TOL || d(x - 1) > d(i) + ORDER_TOL) {
            let i = if d(i) > d(0) + ORDER_TOL { i } else { x - 1 };
            return OrderVerdict::fails_at(vec![i + 1, u + 1]);
        }
    }
    OrderVerdict::holds()
}

fn each_action<F: Fn(usize) -> OrderVerdict>(u: usize, f: F) -> OrderVerdict {
    (0..u).fold(OrderVerdict::holds(), |acc, a| acc.and(f(a)))
}

fn pairwise_orders(p: &[Matrix], b: &[Matrix]) -> Result<(OrderVerdict, OrderVerdict, OrderVerdict)> {
    let x = p[0].rows();
    let mut f3 = OrderVerdict::holds();
    let mut f3p = OrderVerdict::holds();
    let mut f4 = OrderVerdict::holds();
    for u in 0..p.len().saturating_sub(1) {
        let exact = if x == 2 {
            copositive_order_full(&p[u], &b[u], &p[u + 1], &b[u + 1], CopositiveMethod::Exact2State)?
        } else {
            let e = copositive_order_full(&p[u], &b[u], &p[u + 1], &b[u + 1], CopositiveMethod::ElementwiseSufficient)?;
            if e.is_holds() {
                e
            } else {
                copositive_order_full(&p[u], &b[u], &p[u + 1], &b[u + 1], CopositiveMethod::GridFalsify(12))?
            }
        };
        f3 = f3.and(exact);
        let mats = copositive_full_matrices(&p[u], &b[u], &p[u + 1], &b[u + 1])?;
        'outer: for (k, g) in mats.iter().enumerate() {
            for m in 0..x {
                for n in 0..x {
                    let v = 0.5 * (g[(m, n)] + g[(n, m)]);
                    if v < -ORDER_TOL {
                        let y = b[u].cols();
                        f3p = f3p.and(OrderVerdict::fails_at(vec![k / y + 1, k % y + 1, m + 1, n + 1, u + 1]));
                        break 'outer;
                    }
                }
            }
        }
        f4 = f4.and(check_f4(&p[u], &b[u], &p[u + 1], &b[u + 1]));
    }
    Ok((f3, f3p, f4))
}

/// Assumption report for a POMDP with linear costs.
pub fn pomdp_assumption_report(model: &PomdpModel) -> Result<AssumptionReport> {
    let (f3, f3_prime, f4) = pairwise_orders(&model.p, &model.b)?;
    Ok(AssumptionReport {
        c: cost_decreasing(&model.c),
        f1: each_action(model.u, |u| is_tp2(&model.b[u])),
        f2: each_action(model.u, |u| is_tp2(&model.p[u])),
        f3,
        f3_prime,
        f4,
        s: linear_submodular(&model.c),
    })
}

/// Points of the face `{π : π(v) = 0}` on a grid.
fn face_grid(x: usize, v: usize, res: usize) -> Vec<Vec<f64>> {
    simplex_grid(x - 1, res)
        .into_iter()
        .map(|p| {
            let mut out = p;
            out.insert(v, 0.0);
            out
        })
        .collect()
}

/// Assumption report for a stopping problem (action 1 stops, action 2 continues).
///
/// Quadratic stop costs use the sufficient conditions for monotone and
/// submodular costs, the latter evaluated on grids of the two faces.
pub fn stopping_assumption_report(model: &StoppingModel) -> Result<AssumptionReport> {
    let x = model.num_states();
    let cont = &model.continue_cost;
    let mut c = Matrix::zeros(x, 2);
    let (c_verdict, s_verdict) = match &model.stop_cost {
        StopCost::Linear(stop) => {
            for i in 0..x {
                c[(i, 0)] = stop[i];
                c[(i, 1)] = cont[i];
            }
            (cost_decreasing(&c), linear_submodular(&c))
        }
        StopCost::Quadratic { phi, h, alpha } => {
            let mut cv = OrderVerdict::holds();
            for i in 0..x - 1 {
                if phi[i] - phi[i + 1] < 2.0 * alpha * h[0] * (h[i] - h[i + 1]) - ORDER_TOL {
                    cv = OrderVerdict::fails_at(vec![i + 1, i + 2, 1]);
                    break;
                }
            }
            for i in 0..x - 1 {
                if cv.is_holds() && cont[i + 1] > cont[i] + ORDER_TOL {
                    cv = OrderVerdict::fails_at(vec![i + 1, i + 2, 2]);
                }
            }
            // C(π,2) − C(π,1) = φ̃'π + α(h'π)² with φ̃ = c_2 − φ.
            let pt: Vec<f64> = cont.iter().zip(phi).map(|(a, b)| a - b).collect();
            let mut sv = OrderVerdict::holds();
            for pb in face_grid(x, x - 1, 20) {
                let v = pt[x - 1] - dot(&pt, &pb) + 2.0 * alpha * h[x - 1] * (h[x - 1] - dot(h, &pb));
                if v > ORDER_TOL {
                    sv = OrderVerdict::fails(Witness::Belief { belief: pb, value: v });
                    break;
                }
            }
            if sv.is_holds() {
                for pb in face_grid(x, 0, 20) {
                    let v = pt[0] - dot(&pt, &pb) + 2.0 * alpha * h[x - 1] * (h[0] - dot(h, &pb));
                    if v < -ORDER_TOL {
                        sv = OrderVerdict::fails(Witness::Belief { belief: pb, value: v });
                        break;
                    }
                }
            }
            (cv, sv)
        }
    };
    let p = vec![model.p.clone(), model.p.clone()];
    let b = vec![model.b.clone(), model.b.clone()];
    let (f3, f3_prime, f4) = pairwise_orders(&p, &b)?;
    Ok(AssumptionReport {
        c: c_verdict,
        f1: is_tp2(&model.b),
        f2: is_tp2(&model.p),
        f3,
        f3_prime,
        f4,
        s: s_verdict,
    })
}

/// `(1−ε)π̄ + ε e_v`.
pub fn line_point(base: &[f64], vertex: usize, eps: f64) -> Vec<f64> {
    let e = unit(base.len(), vertex);
    base.iter().zip(&e).map(|(b, v)| (1.0 - eps) * b + eps * v).collect()
}

/// An MLR-ordered pair `(larger, smaller)` drawn along a random line through `e_1` or `e_X`.
pub fn sample_mlr_pair<R: rand::Rng + ?Sized>(rng: &mut R, x: usize) -> (Vec<f64>, Vec<f64>) {
    let base = sample_simplex(rng, x);
    let (mut e1, mut e2): (f64, f64) = (rng.random(), rng.random());
    if e1 > e2 {
        std::mem::swap(&mut e1, &mut e2);
    }
    if rng.random::<bool>() {
        (line_point(&base, x - 1, e2), line_point(&base, x - 1, e1))
    } else {
        (line_point(&base, 0, e1), line_point(&base, 0, e2))
    }
}

/// Checks that `value` is MLR decreasing on `n_pairs` sampled comparable pairs.
pub fn verify_value_monotone(value: &dyn Fn(&[f64]) -> f64, x: usize, n_pairs: usize, seed: u64) -> OrderVerdict {
    let mut r = rng(seed);
    for _ in 0..n_pairs {
        let (hi, lo) = sample_mlr_pair(&mut r, x);
        let d = value(&hi) - value(&lo);
        if d > VALUE_TOL {
            return OrderVerdict::fails(Witness::Beliefs { beliefs: vec![hi, lo], value: d });
        }
    }
    OrderVerdict::holds()
}

/// A change of action while scanning `π(2)` upward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jump {
    /// First grid value of `π(2)` carrying the new action.
    pub position: f64,
    /// New action (0-based).
    pub action: usize,
}

/// Two-state threshold extraction on the grid `π(2) = k/grid`.
pub fn extract_thresholds_2state(policy: &dyn Fn(&[f64]) -> usize, grid: usize) -> Result<Vec<Jump>> {
    let grid = grid.max(1);
    let mut prev = policy(&[1.0, 0.0]);
    let mut jumps = Vec::new();
    for k in 1..=grid {
        let p2 = k as f64 / grid as f64;
        let a = policy(&[1.0 - p2, p2]);
        if a < prev {
            return Err(Error::NotMonotone { index: k, from: prev + 1, to: a + 1 });
        }
        if a > prev {
            jumps.push(Jump { position: p2, action: a });
        }
        prev = a;
    }
    Ok(jumps)
}

/// Maximal runs of grid points `π(2) = k/grid` on which `pred` holds, as `[lo, hi]` intervals.
pub fn intervals_2state(pred: &dyn Fn(&[f64]) -> bool, grid: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    let mut last = 0.0;
    for k in 0..=grid {
        let p2 = k as f64 / grid as f64;
        if pred(&[1.0 - p2, p2]) {
            start.get_or_insert(p2);
            last = p2;
        } else if let Some(s) = start.take() {
            out.push((s, last));
        }
    }
    if let Some(s) = start {
        out.push((s, last));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineProbe {
    pub id: usize,
    /// Line vertex, 1-based (1 or X).
    pub vertex: usize,
    pub base: Vec<f64>,
    /// Smallest ε from which the action stays constant up to the vertex.
    pub threshold: f64,
    pub belief: Vec<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwitchingCurve {
    pub lines: Vec<LineProbe>,
    pub verdict: OrderVerdict,
    /// Action at each vertex, 1-based.
    pub vertex_actions: Vec<usize>,
}

impl SwitchingCurve {
    /// `line,epsilon,pi_1..pi_X`.
    pub fn to_csv(&self) -> String {
        let x = self.vertex_actions.len();
        let mut s = String::from("line,epsilon");
        for i in 1..=x {
            s += &format!(",pi_{i}");
        }
        s.push('\n');
        for l in &self.lines {
            s += &format!("{},{}", l.id + 1, crate::fmt12(l.threshold));
            for v in &l.belief {
                s += &format!(",{}", crate::fmt12(*v));
            }
            s.push('\n');
        }
        s
    }
}

/// Probes the policy on lines toward `e_X` (bases on `π(X)=0`) and toward `e_1`
/// (bases on `π(1)=0`). Along a line toward `e_X` the action may only increase;
/// toward `e_1` it may only decrease.
pub fn probe_switching_curve(
    policy: &dyn Fn(&[f64]) -> usize,
    x: usize,
    n_lines: usize,
    points: usize,
    seed: u64,
) -> SwitchingCurve {
    let mut r = rng(seed);
    let points = points.max(2);
    let mut lines = Vec::with_capacity(n_lines);
    let mut verdict = OrderVerdict::holds();
    for id in 0..n_lines {
        let toward_x = id % 2 == 0;
        let (vertex, face) = if toward_x { (x - 1, x - 1) } else { (0, 0) };
        let mut base = sample_simplex(&mut r, x - 1);
        base.insert(face, 0.0);
        let eps: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
        let acts: Vec<usize> = eps.iter().map(|&e| policy(&line_point(&base, vertex, e))).collect();
        let monotone = acts.windows(2).all(|w| if toward_x { w[1] >= w[0] } else { w[1] <= w[0] });
        let last = acts[points - 1];
        let k = (0..points).rev().take_while(|&k| acts[k] == last).last().unwrap_or(points - 1);
        let belief = line_point(&base, vertex, eps[k]);
        if !monotone && verdict.is_holds() {
            verdict = OrderVerdict::fails(Witness::Note { note: format!("line {} toward e_{} is not monotone", id + 1, vertex + 1) });
        }
        lines.push(LineProbe { id, vertex: vertex + 1, base, threshold: eps[k], belief, monotone });
    }
    let vertex_actions = (0..x).map(|i| policy(&unit(x, i)) + 1).collect();
    SwitchingCurve { lines, verdict, vertex_actions }
}

/// Samples pairs of beliefs where `policy` picks `stop_action` and checks their midpoints.
pub fn check_stop_set_convex(policy: &dyn Fn(&[f64]) -> usize, stop_action: usize, x: usize, n_triples: usize, seed: u64) -> OrderVerdict {
    let mut r = rng(seed);
    let mut stops = Vec::new();
    for _ in 0..(20 * n_triples).max(200) {
        let pi = sample_simplex(&mut r, x);
        if policy(&pi) == stop_action {
            stops.push(pi);
        }
    }
    for i in 0..x {
        let e = unit(x, i);
        if policy(&e) == stop_action {
            stops.push(e);
        }
    }
    if stops.len() < 2 {
        return OrderVerdict::holds();
    }
    for _ in 0..n_triples {
        let a = r.random_range(0..stops.len());
        let b = r.random_range(0..stops.len());
        let mid: Vec<f64> = stops[a].iter().zip(&stops[b]).map(|(p, q)| 0.5 * (p + q)).collect();
        if policy(&mid) != stop_action {
            return OrderVerdict::fails(Witness::Beliefs { beliefs: vec![stops[a].clone(), stops[b].clone(), mid], value: 0.0 });
        }
    }
    OrderVerdict::holds()
}

#[derive(Debug, Clone, Serialize)]
pub struct CostComparison {
    pub verdict: OrderVerdict,
    /// Largest observed `J1 − J2` (nonpositive when the ordering holds).
    pub max_gap: f64,
}

fn gap_verdict(gaps: impl Iterator<Item = (Vec<f64>, f64)>) -> CostComparison {
    let mut worst: Option<(Vec<f64>, f64)> = None;
    for (at, g) in gaps {
        if worst.as_ref().is_none_or(|w| g > w.1) {
            worst = Some((at, g));
        }
    }
    let (at, g) = worst.unwrap_or((Vec::new(), f64::NEG_INFINITY));
    let verdict = if g > VALUE_TOL { OrderVerdict::fails(Witness::Belief { belief: at, value: g }) } else { OrderVerdict::holds() };
    CostComparison { verdict, max_gap: g }
}

/// Checks `J1(x) ≤ J2(x)` over an `n`-stage horizon when the rows of `mdp1`
/// first-order dominate those of `mdp2` and costs are shared.
pub fn compare_mdp_costs(mdp1: &Mdp, mdp2: &Mdp, n: usize) -> Result<CostComparison> {
    if mdp1.c != mdp2.c || mdp1.terminal != mdp2.terminal || mdp1.rho != mdp2.rho {
        return Err(Error::PreconditionFailed("costs and discount must be shared".into()));
    }
    let rep = mdp_monotone_report(mdp2, MonotoneVariant::Standard);
    if !rep.a1.is_holds() || !rep.a2.is_holds() {
        return Err(Error::PreconditionFailed("(A1) and (A2) must hold for the second MDP".into()));
    }
    for (a, (p1, p2)) in mdp1.p.iter().zip(&mdp2.p).enumerate() {
        for i in 0..p1.rows() {
            if !fosd_compare(p1.row(i), p2.row(i))?.ge() {
                return Err(Error::PreconditionFailed(format!("row {} of action {} is not dominated", i + 1, a + 1)));
            }
        }
    }
    let j1 = mdp1.solve_finite(n).values.swap_remove(0);
    let j2 = mdp2.solve_finite(n).values.swap_remove(0);
    Ok(gap_verdict((0..j1.len()).map(|i| (unit(j1.len(), i), j1[i] - j2[i]))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    Transition,
    Observation,
}

/// Checks `J(better) ≤ J(worse)` at `samples` uniform beliefs with `n`-stage
/// exact solves. `Transition`: `better.P(u)` copositively dominates
/// `worse.P(u)` and (C)(F1)(F2) hold. `Observation`: `worse.B(u) = better.B(u)·R`.
pub fn compare_pomdp_costs(
    better: &PomdpModel,
    worse: &PomdpModel,
    kind: Perturbation,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<CostComparison> {
    if better.c != worse.c || better.rho != worse.rho || better.x != worse.x || better.u != worse.u {
        return Err(Error::PreconditionFailed("costs, discount and dimensions must be shared".into()));
    }
    match kind {
        Perturbation::Transition => {
            if better.b != worse.b {
                return Err(Error::PreconditionFailed("observation kernels must be shared".into()));
            }
            for m in [better, worse] {
                let r = pomdp_assumption_report(m)?;
                if !(r.c.is_holds() && r.f1.is_holds() && r.f2.is_holds()) {
                    return Err(Error::PreconditionFailed("(C), (F1) and (F2) must hold".into()));
                }
            }
            let method = if better.x == 2 { CopositiveMethod::Exact2State } else { CopositiveMethod::ElementwiseSufficient };
            for u in 0..better.u {
                if copositive_order_transitions(&worse.p[u], &better.p[u], method)?.status != Status::Holds {
                    return Err(Error::PreconditionFailed(format!("copositive order not certified for action {}", u + 1)));
                }
            }
        }
        Perturbation::Observation => {
            if better.p != worse.p {
                return Err(Error::PreconditionFailed("transition matrices must be shared".into()));
            }
            for u in 0..better.u {
                if blackwell_factorize(&worse.b[u], &better.b[u])?.is_none() {
                    return Err(Error::PreconditionFailed(format!("no Blackwell factorization for action {}", u + 1)));
                }
            }
        }
    }
    let s1 = solve_finite_horizon(better, n, Method::IncrementalPruning, DEFAULT_BUDGET)?;
    let s2 = solve_finite_horizon(worse, n, Method::IncrementalPruning, DEFAULT_BUDGET)?;
    let mut r = rng(seed);
    let pts: Vec<Vec<f64>> = (0..samples).map(|_| sample_simplex(&mut r, better.x)).collect();
    Ok(gap_verdict(pts.into_iter().map(|pi| {
        let g = s1.value(&pi) - s2.value(&pi);
        (pi, g)
    })))
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionReport {
    pub terminal_increasing: bool,
    pub terminal_convex: bool,
    /// μ*_n(i,s) ≥ μ*_{n+1}(i,s).
    pub decreasing_in_slots: OrderVerdict,
    /// μ*_n(i,s) nondecreasing in i; asserted only when the terminal cost is convex.
    pub threshold_in_buffer: OrderVerdict,
    pub threshold_asserted: bool,
}

/// Solves the scheduling MDP and checks the monotone structure of its policy.
pub fn transmission_policy_check(mdp: &TransmissionMdp) -> (TransmissionReport, TransmissionSolution) {
    let sol = mdp.solve();
    let t = &mdp.terminal;
    let inc = t.windows(2).all(|w| w[1] >= w[0] - ORDER_TOL);
    let convex = t.windows(3).all(|w| w[2] - w[1] >= w[1] - w[0] - ORDER_TOL);
    let k = mdp.num_channels();
    let mut dec = OrderVerdict::holds();
    'd: for n in 1..mdp.slots {
        for i in 1..=mdp.packets {
            for s in 0..k {
                if sol.policy[n + 1][i][s] > sol.policy[n][i][s] {
                    dec = OrderVerdict::fails_at(vec![n, i, s + 1]);
                    break 'd;
                }
            }
        }
    }
    let mut thr = OrderVerdict::holds();
    't: for n in 1..=mdp.slots {
        for i in 1..mdp.packets {
            for s in 0..k {
                if sol.policy[n][i + 1][s] < sol.policy[n][i][s] {
                    thr = OrderVerdict::fails_at(vec![n, i, s + 1]);
                    break 't;
                }
            }
        }
    }
    let rep = TransmissionReport {
        terminal_increasing: inc,
        terminal_convex: convex,
        decreasing_in_slots: dec,
        threshold_in_buffer: thr,
        threshold_asserted: inc && convex,
    };
    (rep, sol)
}
