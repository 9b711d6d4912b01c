use super::exact::point_backup;
use super::grid::{GridSolution, GridSolver, Interp, SimplexGrid};
use super::vectors::VectorSet;
use crate::model::PomdpModel;

/// Stagewise lower and upper bounds on the finite-horizon value function.
pub struct LovejoyBounds<'a> {
    /// Upper bound: point-based backups at the grid beliefs, `upper[k]` for stage k.
    pub upper: Vec<VectorSet>,
    /// Lower bound: interpolated grid dynamic programming at stage 0.
    pub lower: GridSolution,
    pub solver: GridSolver<'a, PomdpModel>,
}

impl LovejoyBounds<'_> {
    pub fn upper_value(&self, pi: &[f64]) -> f64 {
        self.upper[0].value(pi)
    }

    pub fn lower_value(&self, pi: &[f64]) -> f64 {
        self.solver.value(&self.lower, pi)
    }
}

/// Upper bound from point backups at `points`, for `n` stages.
pub fn point_based_upper(model: &PomdpModel, n: usize, points: &[Vec<f64>]) -> Vec<VectorSet> {
    let mut stages = vec![VectorSet::singleton(model.terminal_cost(), 0, n)];
    for k in (0..n).rev() {
        let next = stages.last().unwrap();
        let vecs = points.iter().map(|b| point_backup(next, model, b)).collect();
        stages.push(VectorSet::new(vecs, k));
    }
    stages.reverse();
    stages
}

/// Bounds over an `n`-stage horizon using the uniform grid of the given resolution.
pub fn lovejoy_bounds(model: &PomdpModel, n: usize, resolution: usize) -> LovejoyBounds<'_> {
    let grid = SimplexGrid::new(model.x, resolution);
    let upper = point_based_upper(model, n, &grid.nodes);
    let solver = GridSolver::new(model, resolution, Interp::Linear);
    let lower = solver.solve_finite(n);
    LovejoyBounds { upper, lower, solver }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Matrix;
    use crate::solver::exact::{solve_finite_horizon, Method, DEFAULT_BUDGET};

    #[test]
    fn bounds_sandwich_exact() {
        let p = vec![Matrix::new(&[[0.8, 0.2], [0.1, 0.9]]), Matrix::new(&[[1.0, 0.0], [1.0, 0.0]])];
        let b = vec![Matrix::new(&[[0.7, 0.3], [0.2, 0.8]]); 2];
        let c = Matrix::new(&[[0.0, 4.0], [3.0, 4.0]]);
        let m = PomdpModel::new(p, b, c, 0.95).unwrap();
        let ex = solve_finite_horizon(&m, 6, Method::IncrementalPruning, DEFAULT_BUDGET).unwrap();
        let lb = lovejoy_bounds(&m, 6, 40);
        for k in 0..=20 {
            let pi = [1.0 - k as f64 / 20.0, k as f64 / 20.0];
            let v = ex.value(&pi);
            assert!(lb.lower_value(&pi) <= v + 1e-9);
            assert!(lb.upper_value(&pi) >= v - 1e-9);
        }
    }
}
