//! Exact vector-set dynamic programming, grid oracles and bounds.

pub mod exact;
pub mod grid;
pub mod lovejoy;
pub mod vectors;

pub use exact::{solve_finite_horizon, value_iteration_discounted, Method, SolveResult, DEFAULT_BUDGET};
pub use grid::{grid_value_oracle, BeliefProblem, GridSolution, GridSolver, Horizon, Interp, SimplexGrid};
pub use lovejoy::{lovejoy_bounds, LovejoyBounds};
pub use vectors::{AlphaVector, VectorSet};
