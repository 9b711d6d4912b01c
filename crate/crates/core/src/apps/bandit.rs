//! POMDP multi-armed bandits: Gittins indices through the retirement
//! formulation and the MLR-opportunistic rule.

use crate::error::{Error, Result};
use crate::filters::filter_with;
use crate::model::{dot, sample_index, shard_rng, Matrix, PomdpModel};
use crate::orders::{mlr_compare, Comparison};
use crate::solver::exact::incremental_pruning_step;
use crate::solver::grid::{hmm_successors, BeliefProblem, GridSolver, Interp};
use crate::solver::vectors::{lp_prune, VectorSet};
use rayon::prelude::*;

pub const DEFAULT_TOL_M: f64 = 1e-4;

/// One bandit arm. Rewards are maximized; a frozen arm does not move.
#[derive(Debug, Clone)]
pub struct Project {
    pub p: Matrix,
    pub b: Matrix,
    pub r: Vec<f64>,
    pub rho: f64,
}

impl Project {
    pub fn new(p: Matrix, b: Matrix, r: Vec<f64>, rho: f64) -> Result<Self> {
        let c = Matrix::from_rows(&r.iter().map(|v| vec![-v]).collect::<Vec<_>>())?;
        let m = PomdpModel::new(vec![p], vec![b], c, rho)?;
        if rho >= 1.0 {
            return Err(Error::InvalidProbability("bandit discount must be below 1".into()));
        }
        Ok(Project { p: m.p[0].clone(), b: m.b[0].clone(), r, rho })
    }

    fn continuation(&self) -> PomdpModel {
        let c = Matrix::from_rows(&self.r.iter().map(|v| vec![-v]).collect::<Vec<_>>()).expect("column");
        PomdpModel::new(vec![self.p.clone()], vec![self.b.clone()], c, self.rho).expect("validated project")
    }

    fn bracket(&self) -> (f64, f64) {
        let lo = self.r.iter().copied().fold(f64::INFINITY, f64::min).min(0.0) / (1.0 - self.rho);
        let hi = self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max) / (1.0 - self.rho);
        (lo, hi)
    }

    /// Iterations after which the truncated retirement value is within `tol`.
    fn iterations(&self, tol: f64) -> usize {
        let (lo, hi) = self.bracket();
        let span = (hi - lo).max(1e-300);
        ((tol / span).ln() / self.rho.ln()).ceil().max(1.0) as usize
    }
}

/// `−V(·, M)` as a vector set, `V(π,M) = max{M, r'π + ρ Σ_y V(T(π,y),M) σ(π,y)}`.
/// Tag 1 marks retirement.
pub fn retirement_value(project: &Project, m: f64, tol: f64, budget: usize) -> Result<VectorSet> {
    let model = project.continuation();
    let x = project.r.len();
    let retire = VectorSet::singleton(vec![-m; x], 1, 0);
    let mut cur = retire.clone();
    for it in 0..project.iterations(tol) {
        let cont = incremental_pruning_step(&cur, &model, it + 1, budget)?;
        let mut next = lp_prune(&cont.union(retire.clone()))?;
        next.stage = 0;
        if next == cur {
            break;
        }
        cur = next;
    }
    Ok(cur)
}

fn bisect(lo: f64, hi: f64, tol: f64, mut continues: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if continues(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest retirement reward `M` at which retiring is optimal at `pi`.
pub fn gittins_index(project: &Project, pi: &[f64], tol_m: f64) -> Result<f64> {
    crate::model::check_belief(pi)?;
    let (lo, hi) = project.bracket();
    let inner = 1e-3 * tol_m;
    bisect(lo, hi, tol_m, |m| Ok(-retirement_value(project, m, inner, crate::solver::DEFAULT_BUDGET)?.value(pi) > m + inner))
}

struct Retirement<'a> {
    project: &'a Project,
    m: f64,
}

impl BeliefProblem for Retirement<'_> {
    fn num_states(&self) -> usize {
        self.project.r.len()
    }
    fn num_actions(&self) -> usize {
        2
    }
    fn discount(&self) -> f64 {
        self.project.rho
    }
    fn cost(&self, pi: &[f64], u: usize) -> f64 {
        if u == 0 {
            -self.m
        } else {
            -dot(&self.project.r, pi)
        }
    }
    fn successors(&self, pi: &[f64], u: usize) -> Vec<(f64, Vec<f64>)> {
        if u == 0 {
            Vec::new()
        } else {
            hmm_successors(&self.project.p, &self.project.b, pi)
        }
    }
}

/// Grid-DP counterpart of [`gittins_index`].
pub fn gittins_index_grid(project: &Project, pi: &[f64], tol_m: f64, resolution: usize) -> Result<f64> {
    let (lo, hi) = project.bracket();
    let x = project.r.len();
    bisect(lo, hi, tol_m, |m| {
        let problem = Retirement { project, m };
        let solver = GridSolver::new(&problem, resolution, Interp::default_for(x));
        let sol = solver.solve_discounted(1e-3 * tol_m * (1.0 - project.rho), 1_000_000)?;
        Ok(-solver.value(&sol, pi) > m + 1e-3 * tol_m)
    })
}

/// Two-state index table on `π(2) = k/(points−1)`, interpolated linearly.
#[derive(Debug, Clone)]
pub struct GittinsTable {
    pub index: Vec<f64>,
}

impl GittinsTable {
    pub fn build(project: &Project, points: usize, tol_m: f64, resolution: usize) -> Result<Self> {
        if project.r.len() != 2 || points < 2 {
            return Err(Error::Invalid("index table needs two states and two points".into()));
        }
        let index = (0..points)
            .into_par_iter()
            .map(|k| {
                let p2 = k as f64 / (points - 1) as f64;
                gittins_index_grid(project, &[1.0 - p2, p2], tol_m, resolution)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GittinsTable { index })
    }

    pub fn value(&self, pi: &[f64]) -> f64 {
        let n = self.index.len() - 1;
        let t = pi[1].clamp(0.0, 1.0) * n as f64;
        let k = (t.floor() as usize).min(n - 1);
        let w = t - k as f64;
        (1.0 - w) * self.index[k] + w * self.index[k + 1]
    }
}

/// Index of the MLR-largest belief, first on ties; NotComparable if the
/// beliefs do not form a chain.
pub fn opportunistic_bandit_policy(beliefs: &[Vec<f64>]) -> Result<usize> {
    if beliefs.is_empty() {
        return Err(Error::Invalid("no projects".into()));
    }
    let mut best = 0;
    for l in 1..beliefs.len() {
        match mlr_compare(&beliefs[l], &beliefs[best])? {
            Comparison::GE => best = l,
            Comparison::EQ | Comparison::LE => {}
            Comparison::Incomparable => return Err(Error::NotComparable),
        }
    }
    for l in 0..beliefs.len() {
        for k in l + 1..beliefs.len() {
            if mlr_compare(&beliefs[l], &beliefs[k])? == Comparison::Incomparable {
                return Err(Error::NotComparable);
            }
        }
    }
    Ok(best)
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Halfspaces `w'π ≤ 0` expressing `π ≥_r lower` and `π ≤_r upper`.
fn mlr_halfspaces(x: usize, lower: Option<&[f64]>, upper: Option<&[f64]>) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..x {
        for j in i + 1..x {
            if let Some(a) = lower {
                let mut w = vec![0.0; x];
                w[i] = a[j];
                w[j] = -a[i];
                out.push(w);
            }
            if let Some(a) = upper {
                let mut w = vec![0.0; x];
                w[i] = -a[j];
                w[j] = a[i];
                out.push(w);
            }
        }
    }
    out
}

fn dykstra(pi: &[f64], halfspaces: &[Vec<f64>]) -> Vec<f64> {
    let sets = halfspaces.len() + 1;
    let mut z = pi.to_vec();
    let mut incr = vec![vec![0.0; pi.len()]; sets];
    for _ in 0..20_000 {
        let before = z.clone();
        for s in 0..sets {
            let y: Vec<f64> = z.iter().zip(&incr[s]).map(|(a, b)| a + b).collect();
            let proj = if s == 0 {
                project_simplex(&y)
            } else {
                let w = &halfspaces[s - 1];
                let ww = dot(w, w);
                let v = dot(w, &y);
                if v <= 0.0 || ww == 0.0 {
                    y.clone()
                } else {
                    y.iter().zip(w).map(|(a, b)| a - v / ww * b).collect()
                }
            };
            incr[s] = y.iter().zip(&proj).map(|(a, b)| a - b).collect();
            z = proj;
        }
        if z.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-14 {
            break;
        }
    }
    project_simplex(&z)
}

/// Nearest belief (Euclidean) to `pi` that is MLR comparable with every
/// member of `chain`, which must be sorted MLR-decreasing.
pub fn project_to_chain(pi: &[f64], chain: &[Vec<f64>]) -> Vec<f64> {
    let x = pi.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for slot in 0..=chain.len() {
        let upper = slot.checked_sub(1).map(|k| chain[k].as_slice());
        let lower = chain.get(slot).map(Vec::as_slice);
        let cand = dykstra(pi, &mlr_halfspaces(x, lower, upper));
        let d: f64 = cand.iter().zip(pi).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, cand));
        }
    }
    best.expect("at least one slot").1
}

/// Mean and standard error of the discounted reward of `rule` over
/// `episodes`. Arms draw randomness from their own streams, so two rules
/// that make the same choices see the same sample path.
pub fn simulate_bandit(
    project: &Project,
    pi0: &[Vec<f64>],
    rule: &(dyn Fn(&[Vec<f64>]) -> usize + Sync),
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> (f64, f64) {
    let l = pi0.len();
    let totals: Vec<f64> = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rngs: Vec<_> = (0..l).map(|k| shard_rng(seed, (e * l + k) as u64)).collect();
            let mut beliefs = pi0.to_vec();
            let mut states: Vec<usize> = (0..l).map(|k| sample_index(&mut rngs[k], &pi0[k])).collect();
            let mut total = 0.0;
            let mut disc = 1.0;
            for _ in 0..horizon {
                let u = rule(&beliefs);
                total += disc * project.r[states[u]];
                disc *= project.rho;
                let r = &mut rngs[u];
                states[u] = sample_index(r, project.p.row(states[u]));
                let y = sample_index(r, project.b.row(states[u]));
                if let Ok(s) = filter_with(&project.p, &project.b, &beliefs[u], y) {
                    beliefs[u] = s.posterior;
                }
            }
            total
        })
        .collect();
    let n = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / n;
    let var = totals.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Opportunistic rule with the projection fallback: when the chain breaks,
/// each belief is replaced by its projection onto the chain of the others.
pub fn opportunistic_with_projection(beliefs: &[Vec<f64>]) -> usize {
    if let Ok(u) = opportunistic_bandit_policy(beliefs) {
        return u;
    }
    let mut fixed = beliefs.to_vec();
    for l in 0..fixed.len() {
        let mut others: Vec<Vec<f64>> = fixed.iter().enumerate().filter(|(k, _)| *k != l).map(|(_, v)| v.clone()).collect();
        let chain_ok = opportunistic_bandit_policy(&others).is_ok();
        if !chain_ok {
            continue;
        }
        others.sort_by(|a, b| match mlr_compare(a, b) {
            Ok(Comparison::GE) => std::cmp::Ordering::Less,
            Ok(Comparison::LE) => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Equal,
        });
        fixed[l] = project_to_chain(&fixed[l], &others);
        if let Ok(u) = opportunistic_bandit_policy(&fixed) {
            return u;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn project() -> Project {
        Project::new(Matrix::new(&[[0.9, 0.1], [0.2, 0.8]]), Matrix::new(&[[0.8, 0.2], [0.3, 0.7]]), vec![0.2, 1.0], 0.8).unwrap()
    }

    #[test]
    fn constant_reward_index() {
        let p = Project::new(Matrix::new(&[[0.5, 0.5], [0.5, 0.5]]), Matrix::identity(2), vec![0.7, 0.7], 0.9).unwrap();
        let g = gittins_index(&p, &[0.3, 0.7], 1e-7).unwrap();
        assert!((g - 7.0).abs() < 1e-6, "{g}");
    }

    #[test]
    fn exact_matches_grid() {
        let p = project();
        for pi in [[0.5, 0.5], [0.9, 0.1], [0.2, 0.8]] {
            let a = gittins_index(&p, &pi, 1e-4).unwrap();
            let b = gittins_index_grid(&p, &pi, 1e-4, 400).unwrap();
            assert!((a - b).abs() <= 2e-4, "{a} {b}");
        }
    }

    #[test]
    fn opportunistic_rules() {
        assert_eq!(opportunistic_bandit_policy(&[vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap(), 1);
        assert_eq!(opportunistic_bandit_policy(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(), 0);
        let a = vec![0.5, 0.0, 0.5];
        let b = vec![0.0, 1.0, 0.0];
        assert_eq!(opportunistic_bandit_policy(&[a.clone(), b.clone()]), Err(Error::NotComparable));
        let pr = project_to_chain(&a, &[b.clone()]);
        assert_ne!(mlr_compare(&pr, &b).unwrap(), Comparison::Incomparable);
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }
}
