//! Global stopping driven by a public belief formed from local myopic
//! actions. Global action 0 stops (declares state 1), 1 continues.

use crate::error::{Error, Result};
use crate::filters::social_learning_step;
use crate::model::Matrix;
use crate::solver::grid::{BeliefProblem, GridSolver, Interp};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SocialParams {
    /// `c(e_i, a)`, X×A.
    pub local_costs: Matrix,
    pub b: Matrix,
    pub d: f64,
    pub beta: f64,
    pub rho: f64,
}

impl SocialParams {
    /// The two-state double-threshold example.
    pub fn example() -> Self {
        SocialParams {
            local_costs: Matrix::new(&[[4.57, 5.57], [2.57, 0.0]]),
            b: Matrix::new(&[[0.9, 0.1], [0.1, 0.9]]),
            d: 1.8,
            beta: 2.0,
            rho: 0.9,
        }
    }
}

/// `κ_0 = 1 ≥ … ≥ κ_4 = 0` bounding the intervals `P_l = (κ_l, κ_{l−1}]` of `π(2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocialPartition {
    pub kappa: [f64; 5],
}

impl SocialPartition {
    /// Interval index `l ∈ 1..=4` containing `π(2)`.
    pub fn region(&self, p2: f64) -> usize {
        if p2 <= self.kappa[4] {
            return 4;
        }
        (1..=4).find(|&l| p2 > self.kappa[l] && p2 <= self.kappa[l - 1]).unwrap_or(1)
    }
}

pub fn social_learning_partition(local_costs: &Matrix, b: &Matrix) -> Result<SocialPartition> {
    if local_costs.rows() != 2 || local_costs.cols() != 2 || b.rows() != 2 || b.cols() != 2 {
        return Err(Error::DimensionMismatch("partition needs two states, actions and observations".into()));
    }
    let g1 = local_costs[(0, 1)] - local_costs[(0, 0)];
    let g2 = local_costs[(1, 0)] - local_costs[(1, 1)];
    if g1 <= 0.0 || g2 <= 0.0 {
        return Err(Error::PreconditionFailed("each local action must be strictly best in one state".into()));
    }
    let k = |w1: f64, w2: f64| g1 * w1 / (g1 * w1 + g2 * w2);
    Ok(SocialPartition { kappa: [1.0, k(b[(0, 0)], b[(1, 0)]), k(1.0, 1.0), k(b[(0, 1)], b[(1, 1)]), 0.0] })
}

/// Belief problem of the global stopper, with costs already shifted so that
/// stopping is free.
pub struct SocialStop<'a> {
    pub params: &'a SocialParams,
}

impl BeliefProblem for SocialStop<'_> {
    fn num_states(&self) -> usize {
        self.params.b.rows()
    }
    fn num_actions(&self) -> usize {
        2
    }
    fn discount(&self) -> f64 {
        self.params.rho
    }
    fn cost(&self, pi: &[f64], u: usize) -> f64 {
        let q = self.params;
        if u == 0 {
            0.0
        } else {
            q.d * pi[0] - (1.0 - q.rho) * q.beta * pi[1]
        }
    }
    fn successors(&self, pi: &[f64], u: usize) -> Vec<(f64, Vec<f64>)> {
        if u == 0 {
            return Vec::new();
        }
        let q = self.params;
        (0..q.local_costs.cols())
            .filter_map(|a| social_learning_step(pi, a, &q.local_costs, &q.b).ok())
            .map(|s| (s.sigma, s.posterior))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SocialSolution {
    /// Grid of `π(2)` values.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
    /// Maximal runs of stopping grid points.
    pub stop_intervals: Vec<(f64, f64)>,
    /// Three consecutive `π(2)` values where the value lies below its chord.
    pub nonconcave_at: Option<[f64; 3]>,
}

impl SocialSolution {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pi2,value,action\n");
        for ((p, v), a) in self.grid.iter().zip(&self.values).zip(&self.policy) {
            s += &format!("{},{},{}\n", crate::fmt12(*p), crate::fmt12(*v), a + 1);
        }
        s
    }
}

/// Value iteration on `points` equally spaced values of `π(2)`.
pub fn solve_social_learning_stop(params: &SocialParams, points: usize) -> Result<SocialSolution> {
    if params.b.rows() != 2 {
        return Err(Error::DimensionMismatch("social stopping is solved for two states".into()));
    }
    if points < 3 {
        return Err(Error::Invalid("grid needs at least 3 points".into()));
    }
    let problem = SocialStop { params };
    let solver = GridSolver::new(&problem, points - 1, Interp::Linear);
    let sol = solver.solve_discounted(1e-10, 1_000_000)?;
    let grid: Vec<f64> = solver.grid.nodes.iter().map(|n| n[1]).collect();
    let mut stop_intervals = Vec::new();
    let mut start: Option<f64> = None;
    for (k, &p2) in grid.iter().enumerate() {
        if sol.policy[k] == 0 {
            start.get_or_insert(p2);
        } else if let Some(s) = start.take() {
            stop_intervals.push((s, grid[k - 1]));
        }
    }
    if let Some(s) = start {
        stop_intervals.push((s, *grid.last().unwrap()));
    }
    let v = &sol.values;
    let nonconcave_at = (1..v.len() - 1)
        .find(|&k| v[k] < 0.5 * (v[k - 1] + v[k + 1]) - 1e-9)
        .map(|k| [grid[k - 1], grid[k], grid[k + 1]]);
    Ok(SocialSolution { grid, values: sol.values, policy: sol.policy, stop_intervals, nonconcave_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_values() {
        let p = SocialParams::example();
        let k = social_learning_partition(&p.local_costs, &p.b).unwrap().kappa;
        assert!((k[1] - 0.9 / 1.157).abs() < 1e-12);
        assert!((k[2] - 1.0 / 3.57).abs() < 1e-12);
        assert!((k[3] - 0.1 / 2.413).abs() < 1e-12);
        let sym = social_learning_partition(&Matrix::new(&[[0.0, 1.0], [1.0, 0.0]]), &p.b).unwrap();
        assert!((sym.kappa[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn free_stop_everywhere() {
        let p = SocialParams { beta: 0.0, ..SocialParams::example() };
        let s = solve_social_learning_stop(&p, 101).unwrap();
        assert!(s.policy.iter().all(|&a| a == 0));
        assert_eq!(s.stop_intervals, vec![(0.0, 1.0)]);
    }
}
