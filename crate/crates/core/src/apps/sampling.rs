//! Detection with controlled sampling intervals. Action 0 stops and
//! announces; action `u ≥ 1` waits `D_u` steps before the next measurement.

use crate::error::{Error, Result};
use crate::model::{dot, Matrix, PomdpModel, RawModel};
use crate::solver::grid::{hmm_successors, BeliefProblem};

#[derive(Debug, Clone)]
pub struct SamplingControl {
    pub p: Matrix,
    pub b: Matrix,
    pub intervals: Vec<usize>,
    /// `costs[u]` is `C_u`; `costs[0] = 1 − e_1`.
    pub costs: Vec<Vec<f64>>,
    /// `powers[u] = P^{D_u}`, with `powers[0]` unused.
    pub powers: Vec<Matrix>,
    pub rho: f64,
}

/// `m` is X×L: column `u−1` is the measurement cost of interval `D_u`.
pub fn build_sampling_control(p: Matrix, b: Matrix, intervals: &[usize], m: &Matrix, d: f64, rho: f64) -> Result<SamplingControl> {
    let x = p.rows();
    let l = intervals.len();
    if p.cols() != x || b.rows() != x || m.rows() != x || m.cols() != l {
        return Err(Error::DimensionMismatch("sampling model dimensions".into()));
    }
    if l == 0 || intervals.contains(&0) {
        return Err(Error::Invalid("sampling intervals must be positive".into()));
    }
    if m.as_slice().iter().any(|v| *v < 0.0) {
        return Err(Error::NegativeEntry("measurement cost".into()));
    }
    let mut p = p;
    let mut b = b;
    p.make_stochastic(0)?;
    b.make_stochastic(0)?;
    let mut costs = vec![(0..x).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect::<Vec<_>>()];
    let mut powers = vec![Matrix::identity(x)];
    for (k, &dk) in intervals.iter().enumerate() {
        let mut delay = vec![0.0; x];
        let mut pt = Matrix::identity(x);
        for _ in 0..dk {
            for (i, v) in delay.iter_mut().enumerate() {
                *v += d * pt[(i, 0)];
            }
            pt = pt.mul(&p);
        }
        costs.push((0..x).map(|i| m[(i, k)] + delay[i]).collect());
        powers.push(pt);
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidProbability(format!("rho = {rho}")));
    }
    Ok(SamplingControl { p, b, intervals: intervals.to_vec(), costs, powers, rho })
}

impl SamplingControl {
    /// POMDP with `U = L+1` actions and an extra absorbing cost-free state
    /// (last index) entered on stopping.
    pub fn to_pomdp(&self) -> Result<PomdpModel> {
        let x = self.p.rows();
        let n = x + 1;
        let y = self.b.cols();
        let u = self.costs.len();
        let mut ps = Vec::with_capacity(u);
        for a in 0..u {
            let mut t = Matrix::zeros(n, n);
            for i in 0..x {
                if a == 0 {
                    t[(i, x)] = 1.0;
                } else {
                    t.row_mut(i)[..x].copy_from_slice(self.powers[a].row(i));
                }
            }
            t[(x, x)] = 1.0;
            ps.push(t.to_rows());
        }
        let mut b = self.b.to_rows();
        b.push(vec![1.0 / y as f64; y]);
        let c: Vec<Vec<f64>> = (0..n).map(|i| (0..u).map(|a| if i < x { self.costs[a][i] } else { 0.0 }).collect()).collect();
        crate::model::validate_model(&RawModel {
            x: n,
            u,
            y,
            p: ps,
            b: vec![b; u],
            c,
            rho: self.rho,
            horizon: None,
            terminal: None,
            absorbing: Some(n),
        })
    }
}

impl BeliefProblem for SamplingControl {
    fn num_states(&self) -> usize {
        self.p.rows()
    }
    fn num_actions(&self) -> usize {
        self.costs.len()
    }
    fn discount(&self) -> f64 {
        self.rho
    }
    fn cost(&self, pi: &[f64], u: usize) -> f64 {
        dot(&self.costs[u], pi)
    }
    fn successors(&self, pi: &[f64], u: usize) -> Vec<(f64, Vec<f64>)> {
        if u == 0 {
            Vec::new()
        } else {
            hmm_successors(&self.powers[u], &self.b, pi)
        }
    }
    fn terminal_cost(&self, pi: &[f64]) -> f64 {
        dot(&self.costs[0], pi)
    }
}
