//! Myopic policy bounds through cost transformations.
//!
//! Adding `(I − ρP(u))f` to the cost of action `u` leaves the optimal policy
//! unchanged. With transformed costs increasing (C1) or decreasing (C2) in the
//! state, the associated myopic policies bound the optimal one from above and
//! below; where they agree the optimal action is known.

use crate::error::{Error, Polytope, Result};
use crate::filters::{hmm_filter_step, ZERO_LIKELIHOOD};
use crate::lp::{Lp, LpOutcome, Relation};
use crate::model::{dot, sample_index, sample_simplex, shard_rng, Matrix, PomdpModel};
use crate::orders::blackwell_factorize;
use crate::solver::grid::argmin_low;
use rayon::prelude::*;

/// Margin standing in for strict inequalities.
pub const STRICT_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MyopicPair {
    pub f_upper: Vec<f64>,
    pub f_lower: Vec<f64>,
    /// `C̄_u` as columns (X × U).
    pub c_upper: Matrix,
    /// `C̲_u` as columns (X × U).
    pub c_lower: Matrix,
}

/// `c_u + (I − ρP(u))f` for every action.
pub fn transformed_costs(model: &PomdpModel, f: &[f64]) -> Matrix {
    let mut out = model.c.clone();
    for u in 0..model.u {
        let pf = model.p[u].mul_vec(f);
        for i in 0..model.x {
            out[(i, u)] += f[i] - model.rho * pf[i];
        }
    }
    out
}

/// Row `i` of `I − ρP(u)`.
fn m_row(model: &PomdpModel, u: usize, i: usize) -> Vec<f64> {
    (0..model.x).map(|j| f64::from(u8::from(i == j)) - model.rho * model.p[u][(i, j)]).collect()
}

/// Rows `(a, b)` of `a'f ≤ b` describing the C1 (`increasing`) or C2 polytope.
fn polytope(model: &PomdpModel, increasing: bool) -> Vec<(Vec<f64>, f64)> {
    let sign = if increasing { 1.0 } else { -1.0 };
    let mut rows = Vec::new();
    for u in 0..model.u {
        for i in 0..model.x - 1 {
            let (a, b) = (m_row(model, u, i), m_row(model, u, i + 1));
            let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| sign * (p - q)).collect();
            let dc = model.c[(i, u)] - model.c[(i + 1, u)];
            rows.push((d, -STRICT_DELTA - sign * dc));
        }
    }
    rows
}

fn lp_over(model: &PomdpModel, increasing: bool, obj: Vec<f64>) -> Lp {
    let mut lp = Lp::minimize(obj);
    for (a, b) in polytope(model, increasing) {
        lp.add(a, Relation::Le, b);
    }
    lp
}

fn which(increasing: bool) -> Polytope {
    if increasing {
        Polytope::C1
    } else {
        Polytope::C2
    }
}

fn min_one(model: &PomdpModel, increasing: bool) -> Result<Vec<f64>> {
    match lp_over(model, increasing, vec![1.0; model.x]).solve()? {
        LpOutcome::Optimal { x, .. } => Ok(x),
        LpOutcome::Infeasible => Err(Error::Infeasible(which(increasing))),
        LpOutcome::Unbounded => Err(Error::LpNumericFailure("1'f unbounded on a nonnegative polytope".into())),
    }
}

fn pair_from(model: &PomdpModel, f_upper: Vec<f64>, f_lower: Vec<f64>) -> MyopicPair {
    MyopicPair { c_upper: transformed_costs(model, &f_upper), c_lower: transformed_costs(model, &f_lower), f_upper, f_lower }
}

/// Minimizes `1'f` over each polytope (with `f ≥ 0`).
pub fn lp_feasibility_c1_c2(model: &PomdpModel) -> Result<MyopicPair> {
    let fu = min_one(model, true)?;
    let fl = min_one(model, false)?;
    Ok(pair_from(model, fu, fl))
}

fn overlap_vector(model: &PomdpModel, increasing: bool) -> Result<Vec<f64>> {
    let x = model.x;
    // Upper: minimize e_i'(P(2) − P(1))f; lower: minimize e_i'(P(1) − P(2))f.
    let d: Vec<Vec<f64>> = (0..x)
        .map(|i| {
            (0..x)
                .map(|j| {
                    let v = model.p[1][(i, j)] - model.p[0][(i, j)];
                    if increasing {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    let mut alpha = Vec::with_capacity(x);
    for row in &d {
        match lp_over(model, increasing, row.clone()).solve()? {
            LpOutcome::Optimal { value, .. } => alpha.push(value),
            LpOutcome::Infeasible => return Err(Error::Infeasible(which(increasing))),
            LpOutcome::Unbounded => return Err(Error::NoMaximizer),
        }
    }
    let mut lp = lp_over(model, increasing, vec![1.0; x]);
    for (row, a) in d.into_iter().zip(&alpha) {
        lp.add(row, Relation::Le, a + 1e-9 * (1.0 + a.abs()));
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(x),
        _ => Err(Error::NoMaximizer),
    }
}

/// Two-action overlap maximization: `f̄*` attains every `α_i` simultaneously.
pub fn optimize_overlap_2action(model: &PomdpModel) -> Result<MyopicPair> {
    if model.u != 2 {
        return Err(Error::DimensionMismatch(format!("overlap optimization needs 2 actions, got {}", model.u)));
    }
    let fu = overlap_vector(model, true)?;
    let fl = overlap_vector(model, false)?;
    Ok(pair_from(model, fu, fl))
}

fn column_argmin(c: &Matrix, pi: &[f64]) -> usize {
    let q: Vec<f64> = (0..c.cols()).map(|u| dot(&c.col(u), pi)).collect();
    argmin_low(&q)
}

/// `(μ̲(π), μ̄(π))`, 0-based.
pub fn myopic_actions(pair: &MyopicPair, pi: &[f64]) -> (usize, usize) {
    (column_argmin(&pair.c_lower, pi), column_argmin(&pair.c_upper, pi))
}

/// Feasibility of the polytope together with `C_i'π ≤ C_u'π` for all `u`.
fn action_feasible(model: &PomdpModel, increasing: bool, pi: &[f64], i: usize) -> Result<Option<Vec<f64>>> {
    let mut lp = lp_over(model, increasing, vec![1.0; model.x]);
    let rows_i: Vec<Vec<f64>> = (0..model.x).map(|k| m_row(model, i, k)).collect();
    for u in 0..model.u {
        if u == i {
            continue;
        }
        // (c_i − c_u)'π + π'((I−ρP_i) − (I−ρP_u))f ≤ 0
        let mut coef = vec![0.0; model.x];
        for (k, p) in pi.iter().enumerate() {
            let ru = m_row(model, u, k);
            for j in 0..model.x {
                coef[j] += p * (rows_i[k][j] - ru[j]);
            }
        }
        let rhs: f64 = (0..model.x).map(|k| (model.c[(k, u)] - model.c[(k, i)]) * pi[k]).sum();
        lp.add(coef, Relation::Le, rhs);
    }
    Ok(lp.solve()?.optimal().map(|(x, _)| x.to_vec()))
}

/// Per-belief bounds: the smallest action an admissible `f̄` can make myopically
/// optimal, and the largest for `f̲`.
pub fn per_belief_bounds_multiaction(model: &PomdpModel, pi: &[f64]) -> Result<(usize, usize, Vec<f64>, Vec<f64>)> {
    let mut upper = None;
    for i in 0..model.u {
        if let Some(f) = action_feasible(model, true, pi, i)? {
            upper = Some((i, f));
            break;
        }
    }
    let (ub, fu) = upper.ok_or(Error::Infeasible(Polytope::C1))?;
    let mut lower = None;
    for i in (0..model.u).rev() {
        if let Some(f) = action_feasible(model, false, pi, i)? {
            lower = Some((i, f));
            break;
        }
    }
    let (lb, fl) = lower.ok_or(Error::Infeasible(Polytope::C2))?;
    Ok((lb, ub, fu, fl))
}

/// How the bounds are evaluated at each sampled belief.
#[derive(Debug, Clone)]
pub enum BoundMode {
    Fixed(MyopicPair),
    PerBelief,
}

impl BoundMode {
    pub fn bounds(&self, model: &PomdpModel, pi: &[f64]) -> Result<(usize, usize)> {
        match self {
            BoundMode::Fixed(pair) => Ok(myopic_actions(pair, pi)),
            BoundMode::PerBelief => per_belief_bounds_multiaction(model, pi).map(|(l, u, _, _)| (l, u)),
        }
    }

    pub fn in_overlap(&self, model: &PomdpModel, pi: &[f64]) -> Result<bool> {
        let (l, u) = self.bounds(model, pi)?;
        Ok(l == u)
    }
}

const SHARD: usize = 1 << 14;

/// Monte Carlo estimate of the overlap volume fraction and its standard error.
pub fn overlap_volume(model: &PomdpModel, mode: &BoundMode, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let shards = samples.div_ceil(SHARD);
    let counts: Vec<Result<usize>> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut r = shard_rng(seed, k as u64);
            let n = SHARD.min(samples - k * SHARD);
            let mut hit = 0;
            for _ in 0..n {
                let pi = sample_simplex(&mut r, model.x);
                hit += usize::from(mode.in_overlap(model, &pi)?);
            }
            Ok(hit)
        })
        .collect();
    let mut hits = 0;
    for c in counts {
        hits += c?;
    }
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

/// Exact overlap length for two states, where beliefs are `(1−t, t)`.
pub fn overlap_volume_exact_2state(pair: &MyopicPair) -> f64 {
    let mut cuts = vec![0.0, 1.0];
    for c in [&pair.c_lower, &pair.c_upper] {
        for a in 0..c.cols() {
            for b in a + 1..c.cols() {
                // (c_a − c_b)(1−t, t) = 0
                let d0 = c[(0, a)] - c[(0, b)];
                let d1 = c[(1, a)] - c[(1, b)];
                if (d0 - d1).abs() > 0.0 {
                    let t = d0 / (d0 - d1);
                    if t > 0.0 && t < 1.0 {
                        cuts.push(t);
                    }
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            let (l, u) = myopic_actions(pair, &[1.0 - m, m]);
            if l == u {
                w[1] - w[0]
            } else {
                0.0
            }
        })
        .sum()
}

/// Where the initial belief of each percent-loss run comes from.
#[derive(Debug, Clone)]
pub enum LossStart {
    Fixed(Vec<f64>),
    /// Uniform on the complement of the overlap region.
    OutsideOverlap,
}

/// Upper bound on the relative loss of acting optimally on the overlap and
/// taking action 1 elsewhere. Costs accrued outside the overlap are replaced by
/// the statewise minimum over actions in the reference sum; both sums are taken
/// along the same simulated paths.
pub fn percent_loss(model: &PomdpModel, mode: &BoundMode, start: &LossStart, runs: usize, horizon: usize, seed: u64) -> Result<f64> {
    let cmin: Vec<f64> = (0..model.x).map(|i| model.c.row(i).iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    let totals: Vec<Result<(f64, f64)>> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let mut r = shard_rng(seed, k as u64);
            let mut pi = match start {
                LossStart::Fixed(p) => p.clone(),
                LossStart::OutsideOverlap => loop {
                    let p = sample_simplex(&mut r, model.x);
                    if !mode.in_overlap(model, &p)? {
                        break p;
                    }
                },
            };
            let mut x = sample_index(&mut r, &pi);
            let (mut j, mut jt) = (0.0, 0.0);
            let mut disc = 1.0;
            for _ in 0..horizon {
                let (l, u) = mode.bounds(model, &pi)?;
                let (a, inside) = if l == u { (l, true) } else { (0, false) };
                let ca = model.cost(a);
                j += disc * dot(&ca, &pi);
                jt += disc * dot(if inside { &ca } else { &cmin }, &pi);
                disc *= model.rho;
                x = sample_index(&mut r, model.p[a].row(x));
                let y = sample_index(&mut r, model.b[a].row(x));
                pi = match hmm_filter_step(&pi, y, a, model) {
                    Ok(s) => s.posterior,
                    Err(Error::ZeroLikelihood(_)) => break,
                    Err(e) => return Err(e),
                };
            }
            Ok((j, jt))
        })
        .collect();
    let (mut j, mut jt) = (0.0, 0.0);
    for t in totals {
        let (a, b) = t?;
        j += a;
        jt += b;
    }
    if jt.abs() <= ZERO_LIKELIHOOD {
        return Ok(0.0);
    }
    Ok((j - jt) / jt)
}

/// Region where the optimal action is known to be 2 when `B(1) = B(2)R`.
#[derive(Debug, Clone)]
pub struct BlackwellRegion {
    pub r: Matrix,
    pub c: Matrix,
}

impl BlackwellRegion {
    /// `C(π,2) < C(π,1)`.
    pub fn contains(&self, pi: &[f64]) -> bool {
        dot(&self.c.col(1), pi) < dot(&self.c.col(0), pi)
    }

    /// Lower bound on the optimal action (0-based).
    pub fn action(&self, pi: &[f64]) -> usize {
        usize::from(self.contains(pi))
    }
}

/// Requires a two-action model with shared transitions and `B(1) = B(2)R`.
pub fn blackwell_myopic_region(model: &PomdpModel) -> Result<BlackwellRegion> {
    if model.u != 2 {
        return Err(Error::DimensionMismatch("Blackwell region needs 2 actions".into()));
    }
    if model.p[0] != model.p[1] {
        return Err(Error::PreconditionFailed("transition matrices must not depend on the action".into()));
    }
    let r = blackwell_factorize(&model.b[0], &model.b[1])?
        .ok_or_else(|| Error::PreconditionFailed("B(1) is not a garbling of B(2)".into()))?;
    Ok(BlackwellRegion { r, c: model.c.clone() })
}

/// One row of a reproduction table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub rho: f64,
    pub vol: f64,
    pub vol_se: f64,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
}

/// `rho,vol,L1,L2` in percent, empty fields where a loss was not requested.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("rho,vol,L1,L2\n");
    let f = |v: Option<f64>| v.map(|v| crate::fmt12(100.0 * v)).unwrap_or_default();
    for r in rows {
        s += &format!("{},{},{},{}\n", crate::fmt12(r.rho), crate::fmt12(100.0 * r.vol), f(r.l1), f(r.l2));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_action(c: Matrix, p1: Matrix, p2: Matrix) -> PomdpModel {
        let b = Matrix::new(&[[0.8, 0.2], [0.3, 0.7]]);
        PomdpModel::new(vec![p1, p2], vec![b.clone(), b], c, 0.7).unwrap()
    }

    #[test]
    fn trivial_feasibility() {
        let p = Matrix::new(&[[0.9, 0.1], [0.2, 0.8]]);
        let inc = two_action(Matrix::new(&[[1.0, 2.0], [3.0, 4.0]]), p.clone(), p.clone());
        let pair = lp_feasibility_c1_c2(&inc);
        // Increasing costs admit f̄ = 0 but need f̲ ≠ 0 to reverse them.
        let pair = pair.unwrap();
        assert!(pair.f_upper.iter().all(|v| v.abs() < 1e-12));
        let dec = two_action(Matrix::new(&[[4.0, 3.0], [2.0, 1.0]]), p.clone(), p);
        assert!(lp_feasibility_c1_c2(&dec).unwrap().f_lower.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identical_actions_overlap_everywhere() {
        let p = Matrix::new(&[[0.9, 0.1], [0.2, 0.8]]);
        let m = two_action(Matrix::new(&[[1.0, 2.0], [1.5, 0.5]]), p.clone(), p);
        let pair = optimize_overlap_2action(&m).unwrap();
        // With P(1) = P(2) both transformed problems share c_1 − c_2.
        assert!((overlap_volume_exact_2state(&pair) - 1.0).abs() < 1e-12);
        let (v, _) = overlap_volume(&m, &BoundMode::Fixed(pair), 5000, 3).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn exact_and_sampled_volume_agree() {
        let m = two_action(
            Matrix::new(&[[1.0, 1.6], [1.4, 1.0]]),
            Matrix::new(&[[0.7, 0.3], [0.2, 0.8]]),
            Matrix::new(&[[0.5, 0.5], [0.1, 0.9]]),
        );
        let pair = optimize_overlap_2action(&m).unwrap();
        let exact = overlap_volume_exact_2state(&pair);
        let (v, se) = overlap_volume(&m, &BoundMode::Fixed(pair), 40_000, 9).unwrap();
        assert!((v - exact).abs() <= 3.0 * se + 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn per_belief_reduces_to_pair_bounds_for_two_actions() {
        let m = two_action(
            Matrix::new(&[[1.0, 1.6], [1.4, 1.0]]),
            Matrix::new(&[[0.7, 0.3], [0.2, 0.8]]),
            Matrix::new(&[[0.5, 0.5], [0.1, 0.9]]),
        );
        let pair = optimize_overlap_2action(&m).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0 + 0.013;
            let pi = [1.0 - t.min(1.0), t.min(1.0)];
            let (l, u, _, _) = per_belief_bounds_multiaction(&m, &pi).unwrap();
            let (pl, pu) = myopic_actions(&pair, &pi);
            assert!(l <= u);
            assert_eq!((l == u), (pl == pu), "at {pi:?}");
        }
    }

    #[test]
    fn full_overlap_has_no_loss() {
        let p = Matrix::new(&[[0.9, 0.1], [0.2, 0.8]]);
        let m = two_action(Matrix::new(&[[1.0, 2.0], [1.5, 0.5]]), p.clone(), p);
        let mode = BoundMode::Fixed(optimize_overlap_2action(&m).unwrap());
        assert_eq!(percent_loss(&m, &mode, &LossStart::Fixed(vec![0.5, 0.5]), 50, 30, 1).unwrap(), 0.0);
    }
}
