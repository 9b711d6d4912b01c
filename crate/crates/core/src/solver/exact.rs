use super::vectors::{cross_sum, lp_prune, sup_abs_difference, AlphaVector, VectorSet};
use crate::error::{Error, Result};
use crate::model::PomdpModel;
use rayon::prelude::*;
use serde::Serialize;

/// Default cap on the number of vectors held at any point of a backup.
pub const DEFAULT_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    IncrementalPruning,
    Monahan,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Finite horizon: `stages[k]` is Γ_k for k = 0..=N. Discounted: one set.
    pub stages: Vec<VectorSet>,
    pub error_bound: f64,
    pub iterations: usize,
}

#[derive(Serialize)]
struct JsonVector<'a> {
    gamma: &'a [f64],
    action: usize,
}

impl SolveResult {
    /// Value function used for decisions at time 0.
    pub fn initial(&self) -> &VectorSet {
        &self.stages[0]
    }

    pub fn value(&self, pi: &[f64]) -> f64 {
        self.initial().value(pi)
    }

    /// Greedy action (0-based) at stage `k`.
    pub fn action(&self, k: usize, pi: &[f64]) -> usize {
        self.stages[k.min(self.stages.len() - 1)].action(pi)
    }

    /// `{"stage":[[{"gamma":[..],"action":a},..],..],"errorBound":e}` with 1-based actions.
    pub fn to_json(&self) -> serde_json::Value {
        let stages: Vec<Vec<JsonVector>> = self
            .stages
            .iter()
            .map(|s| s.vectors.iter().map(|v| JsonVector { gamma: &v.gamma, action: v.action + 1 }).collect())
            .collect();
        serde_json::json!({ "stage": stages, "errorBound": self.error_bound, "iterations": self.iterations })
    }
}

/// Projection `c_u/Y + ρ P(u) B_y(u) γ` of every vector in `next`.
fn project(model: &PomdpModel, next: &VectorSet, u: usize, y: usize, stage: usize) -> VectorSet {
    VectorSet::new(raw_project(model, next, u, y), stage)
}

fn check_budget(n: usize, stage: usize, budget: usize) -> Result<()> {
    if n > budget {
        return Err(Error::Blowup { stage, size: n });
    }
    Ok(())
}

/// One incremental-pruning backup.
pub fn incremental_pruning_step(next: &VectorSet, model: &PomdpModel, stage: usize, budget: usize) -> Result<VectorSet> {
    let per_action: Vec<Result<VectorSet>> = (0..model.u)
        .into_par_iter()
        .map(|u| {
            let mut acc = lp_prune(&project(model, next, u, 0, stage))?;
            for y in 1..model.y {
                let proj = lp_prune(&project(model, next, u, y, stage))?;
                check_budget(acc.len() * proj.len(), stage, budget)?;
                acc = lp_prune(&cross_sum(&acc, &proj))?;
            }
            Ok(acc)
        })
        .collect();
    let mut all = VectorSet { vectors: Vec::new(), stage };
    for s in per_action {
        all = all.union(s?);
    }
    check_budget(all.len(), stage, budget)?;
    let mut out = lp_prune(&all)?;
    out.stage = stage;
    Ok(out)
}

/// One Monahan backup: full enumeration of `U|Γ|^Y` vectors, then a single prune.
pub fn monahan_step(next: &VectorSet, model: &PomdpModel, stage: usize, budget: usize) -> Result<VectorSet> {
    let (enumerated, _) = monahan_enumerate(next, model, stage, budget)?;
    let mut out = lp_prune(&enumerated)?;
    out.stage = stage;
    Ok(out)
}

/// The unpruned Monahan candidate set and its size before deduplication.
pub fn monahan_enumerate(next: &VectorSet, model: &PomdpModel, stage: usize, budget: usize) -> Result<(VectorSet, usize)> {
    let count = (next.len() as f64).powi(model.y as i32) * model.u as f64;
    if count > budget as f64 {
        return Err(Error::Blowup { stage, size: count.min(usize::MAX as f64) as usize });
    }
    let mut vectors = Vec::new();
    for u in 0..model.u {
        // Keep duplicates so that the enumeration count is exact.
        let projs: Vec<Vec<AlphaVector>> = (0..model.y).map(|y| raw_project(model, next, u, y)).collect();
        let mut acc = projs[0].clone();
        for proj in projs.iter().skip(1) {
            let mut nxt = Vec::with_capacity(acc.len() * proj.len());
            for a in &acc {
                for b in proj {
                    nxt.push(AlphaVector { gamma: a.gamma.iter().zip(&b.gamma).map(|(p, q)| p + q).collect(), action: u });
                }
            }
            acc = nxt;
        }
        vectors.extend(acc);
    }
    let n = vectors.len();
    Ok((VectorSet::new(vectors, stage), n))
}

fn raw_project(model: &PomdpModel, next: &VectorSet, u: usize, y: usize) -> Vec<AlphaVector> {
    let x = model.x;
    let share = 1.0 / model.y as f64;
    next.vectors
        .iter()
        .map(|g| {
            let by: Vec<f64> = (0..x).map(|j| model.b[u][(j, y)] * g.gamma[j]).collect();
            let pb = model.p[u].mul_vec(&by);
            AlphaVector { gamma: (0..x).map(|i| model.c[(i, u)] * share + model.rho * pb[i]).collect(), action: u }
        })
        .collect()
}

fn backup(next: &VectorSet, model: &PomdpModel, stage: usize, method: Method, budget: usize) -> Result<VectorSet> {
    match method {
        Method::IncrementalPruning => incremental_pruning_step(next, model, stage, budget),
        Method::Monahan => monahan_step(next, model, stage, budget),
    }
}

/// Stagewise sets Γ_N = {c_N}, ..., Γ_0.
pub fn solve_finite_horizon(model: &PomdpModel, n: usize, method: Method, budget: usize) -> Result<SolveResult> {
    let mut stages = vec![VectorSet::singleton(model.terminal_cost(), 0, n)];
    for k in (0..n).rev() {
        let next = backup(stages.last().unwrap(), model, k, method, budget)?;
        stages.push(next);
    }
    stages.reverse();
    Ok(SolveResult { stages, error_bound: 0.0, iterations: n })
}

/// Discounted value iteration from V_0 = 0 until `sup|V_n − V_{n−1}| ≤ ε`.
pub fn value_iteration_discounted(model: &PomdpModel, eps: f64, budget: usize, max_iter: usize) -> Result<SolveResult> {
    if !(model.rho < 1.0) {
        return Err(Error::Invalid("discounted value iteration needs rho < 1".into()));
    }
    let mut v = VectorSet::singleton(vec![0.0; model.x], 0, 0);
    for it in 1..=max_iter {
        let next = incremental_pruning_step(&v, model, 0, budget)?;
        let diff = sup_abs_difference(&next, &v)?;
        v = next;
        if diff <= eps {
            return Ok(SolveResult { stages: vec![v], error_bound: eps * model.rho / (1.0 - model.rho), iterations: it });
        }
    }
    Err(Error::Invalid(format!("value iteration did not reach {eps} in {max_iter} iterations")))
}

/// Exactly `n` discounted backups from V_0 = 0.
pub fn value_iteration_n(model: &PomdpModel, n: usize, budget: usize) -> Result<VectorSet> {
    let mut v = VectorSet::singleton(vec![0.0; model.x], 0, 0);
    for _ in 0..n {
        v = incremental_pruning_step(&v, model, 0, budget)?;
    }
    Ok(v)
}

/// Point-based backup at `pi`: the vector of the exact backup that is minimal at `pi`.
pub fn point_backup(next: &VectorSet, model: &PomdpModel, pi: &[f64]) -> AlphaVector {
    let x = model.x;
    let mut best: Option<(f64, AlphaVector)> = None;
    for u in 0..model.u {
        let mut gamma: Vec<f64> = model.cost(u);
        for y in 0..model.y {
            let projs = raw_project_no_cost(model, next, u, y);
            let mut bi = 0;
            let mut bv = f64::INFINITY;
            for (k, g) in projs.iter().enumerate() {
                let v = crate::model::dot(g, pi);
                if v < bv - 1e-12 {
                    bv = v;
                    bi = k;
                }
            }
            for i in 0..x {
                gamma[i] += projs[bi][i];
            }
        }
        let val = crate::model::dot(&gamma, pi);
        if best.as_ref().is_none_or(|(bv, _)| val < *bv - 1e-12) {
            best = Some((val, AlphaVector { gamma, action: u }));
        }
    }
    best.unwrap().1
}

fn raw_project_no_cost(model: &PomdpModel, next: &VectorSet, u: usize, y: usize) -> Vec<Vec<f64>> {
    let x = model.x;
    next.vectors
        .iter()
        .map(|g| {
            let by: Vec<f64> = (0..x).map(|j| model.b[u][(j, y)] * g.gamma[j]).collect();
            model.p[u].mul_vec(&by).into_iter().map(|v| model.rho * v).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::expected_next_value;
    use crate::model::{dot, rng, sample_simplex, sample_stochastic, Matrix};
    use rand::Rng as _;

    fn random_model(seed: u64, x: usize, u: usize, y: usize) -> PomdpModel {
        let mut r = rng(seed);
        let p = (0..u).map(|_| sample_stochastic(&mut r, x, x)).collect();
        let b = (0..u).map(|_| sample_stochastic(&mut r, x, y)).collect();
        let c = Matrix::from_rows(&(0..x).map(|_| (0..u).map(|_| r.random::<f64>() * 5.0).collect()).collect::<Vec<_>>()).unwrap();
        PomdpModel::new(p, b, c, 0.9).unwrap()
    }

    // Direct recursion over the belief tree.
    fn brute(model: &PomdpModel, pi: &[f64], k: usize) -> f64 {
        if k == 0 {
            return dot(&model.terminal_cost(), pi);
        }
        (0..model.u)
            .map(|u| dot(&model.cost(u), pi) + model.rho * expected_next_value(&model.p[u], &model.b[u], pi, &|b| brute(model, b, k - 1)))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn ip_monahan_and_brute_force_agree() {
        let m = random_model(7, 3, 2, 2);
        let ip = solve_finite_horizon(&m, 4, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
        let mo = solve_finite_horizon(&m, 4, Method::Monahan, DEFAULT_BUDGET).unwrap();
        let mut r = rng(1);
        for _ in 0..50 {
            let pi = sample_simplex(&mut r, 3);
            let b = brute(&m, &pi, 4);
            assert!((ip.value(&pi) - b).abs() < 1e-9);
            assert!((mo.value(&pi) - b).abs() < 1e-9);
        }
        assert!(sup_abs_difference(ip.initial(), mo.initial()).unwrap() < 1e-9);
    }

    #[test]
    fn budget_blowup_reported() {
        let m = random_model(3, 3, 3, 3);
        match solve_finite_horizon(&m, 6, Method::Monahan, 50) {
            Err(Error::Blowup { .. }) => {}
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn point_backup_is_on_envelope() {
        let m = random_model(11, 2, 2, 3);
        let next = solve_finite_horizon(&m, 2, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
        let exact = incremental_pruning_step(next.initial(), &m, 0, DEFAULT_BUDGET).unwrap();
        let pi = [0.3, 0.7];
        let pb = point_backup(next.initial(), &m, &pi);
        assert!((dot(&pb.gamma, &pi) - exact.value(&pi)).abs() < 1e-9);
    }

    #[test]
    fn discounted_error_bound() {
        let m = random_model(5, 2, 2, 2);
        let r = value_iteration_discounted(&m, 1e-6, DEFAULT_BUDGET, 10_000).unwrap();
        let more = value_iteration_n(&m, r.iterations + 60, DEFAULT_BUDGET).unwrap();
        assert!(sup_abs_difference(r.initial(), &more).unwrap() <= r.error_bound + 1e-9);
    }
}
