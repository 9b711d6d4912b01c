use crate::error::{Error, Result};
use crate::filters::{ZERO_LIKELIHOOD};
use crate::model::{dot, PomdpModel, StoppingModel};
use rayon::prelude::*;
use std::collections::HashMap;

/// A decision problem posed directly on beliefs, solvable by the grid oracle.
pub trait BeliefProblem: Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn discount(&self) -> f64;
    /// Expected instantaneous cost of action `u` at `pi`.
    fn cost(&self, pi: &[f64], u: usize) -> f64;
    /// `(probability, next belief)` pairs; empty means the action terminates.
    fn successors(&self, pi: &[f64], u: usize) -> Vec<(f64, Vec<f64>)>;
    /// Cost charged when the horizon runs out.
    fn terminal_cost(&self, _pi: &[f64]) -> f64 {
        0.0
    }
}

/// Bayes successors `(σ(π,y), T(π,y))` for one transition/observation pair.
pub fn hmm_successors(p: &crate::model::Matrix, b: &crate::model::Matrix, pi: &[f64]) -> Vec<(f64, Vec<f64>)> {
    let pred = p.tmul_vec(pi);
    let mut out = Vec::with_capacity(b.cols());
    for y in 0..b.cols() {
        let un: Vec<f64> = pred.iter().enumerate().map(|(j, v)| v * b[(j, y)]).collect();
        let s: f64 = un.iter().sum();
        if s > ZERO_LIKELIHOOD {
            out.push((s, un.into_iter().map(|v| v / s).collect()));
        }
    }
    out
}

impl BeliefProblem for PomdpModel {
    fn num_states(&self) -> usize {
        self.x
    }
    fn num_actions(&self) -> usize {
        self.u
    }
    fn discount(&self) -> f64 {
        self.rho
    }
    fn cost(&self, pi: &[f64], u: usize) -> f64 {
        (0..self.x).map(|i| self.c[(i, u)] * pi[i]).sum()
    }
    fn successors(&self, pi: &[f64], u: usize) -> Vec<(f64, Vec<f64>)> {
        hmm_successors(&self.p[u], &self.b[u], pi)
    }
    fn terminal_cost(&self, pi: &[f64]) -> f64 {
        self.terminal.as_ref().map_or(0.0, |t| dot(t, pi))
    }
}

/// Action 0 stops, action 1 continues.
impl BeliefProblem for StoppingModel {
    fn num_states(&self) -> usize {
        self.p.rows()
    }
    fn num_actions(&self) -> usize {
        2
    }
    fn discount(&self) -> f64 {
        self.rho
    }
    fn cost(&self, pi: &[f64], u: usize) -> f64 {
        if u == 0 {
            self.stop_cost.eval(pi)
        } else {
            dot(&self.continue_cost, pi)
        }
    }
    fn successors(&self, pi: &[f64], u: usize) -> Vec<(f64, Vec<f64>)> {
        if u == 0 {
            Vec::new()
        } else {
            hmm_successors(&self.p, &self.b, pi)
        }
    }
    fn terminal_cost(&self, pi: &[f64]) -> f64 {
        self.stop_cost.eval(pi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Barycentric interpolation on the Freudenthal triangulation (linear for X = 2).
    Linear,
    /// Value of the nearest grid node.
    Nearest,
}

impl Interp {
    /// Linear for two states, nearest-node otherwise.
    pub fn default_for(x: usize) -> Self {
        if x == 2 {
            Interp::Linear
        } else {
            Interp::Nearest
        }
    }
}

/// Uniform simplex grid: all compositions of `n` into `x` parts.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    pub x: usize,
    pub n: usize,
    pub nodes: Vec<Vec<f64>>,
    index: HashMap<Vec<u32>, usize>,
}

impl SimplexGrid {
    pub fn new(x: usize, n: usize) -> Self {
        let mut nodes = Vec::new();
        let mut index = HashMap::new();
        let mut cur = vec![0u32; x];
        fn rec(k: usize, left: u32, cur: &mut Vec<u32>, nodes: &mut Vec<Vec<f64>>, index: &mut HashMap<Vec<u32>, usize>, n: usize) {
            if k + 1 == cur.len() {
                cur[k] = left;
                index.insert(cur.clone(), nodes.len());
                nodes.push(cur.iter().map(|&c| c as f64 / n as f64).collect());
                return;
            }
            // Descending so that node 0 is e_1 and the last node is e_X.
            for v in (0..=left).rev() {
                cur[k] = v;
                rec(k + 1, left - v, cur, nodes, index, n);
            }
        }
        rec(0, n as u32, &mut cur, &mut nodes, &mut index, n);
        SimplexGrid { x, n, nodes, index }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_of(&self, counts: &[u32]) -> usize {
        self.index[counts]
    }

    /// Interpolation stencil `(node, weight)` for `pi`.
    pub fn stencil(&self, pi: &[f64], interp: Interp) -> Vec<(usize, f64)> {
        match interp {
            Interp::Nearest => vec![(self.node_of(&self.round(pi)), 1.0)],
            Interp::Linear => self.freudenthal(pi),
        }
    }

    /// Largest-remainder rounding of `n·π` to a composition of `n`.
    pub fn round(&self, pi: &[f64]) -> Vec<u32> {
        let n = self.n as f64;
        let s: f64 = pi.iter().sum();
        let scaled: Vec<f64> = pi.iter().map(|v| (v / s * n).max(0.0)).collect();
        let mut counts: Vec<u32> = scaled.iter().map(|v| v.floor() as u32).collect();
        let mut left = self.n as i64 - counts.iter().map(|&c| c as i64).sum::<i64>();
        let mut order: Vec<usize> = (0..pi.len()).collect();
        order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())).then(a.cmp(&b)));
        let mut k = 0;
        while left > 0 {
            counts[order[k % order.len()]] += 1;
            left -= 1;
            k += 1;
        }
        while left < 0 {
            let i = (0..counts.len()).rev().find(|&i| counts[i] > 0).unwrap();
            counts[i] -= 1;
            left += 1;
        }
        counts
    }

    fn freudenthal(&self, pi: &[f64]) -> Vec<(usize, f64)> {
        let x = self.x;
        let d = x - 1;
        let n = self.n as f64;
        let s: f64 = pi.iter().sum();
        // y_i = n Σ_{j>i} π_j, nonincreasing in i.
        let mut y = vec![0.0; d];
        let mut acc = 0.0;
        for i in (0..d).rev() {
            acc += pi[i + 1] / s;
            y[i] = (acc * n).clamp(0.0, n);
        }
        for i in 1..d {
            if y[i] > y[i - 1] {
                y[i] = y[i - 1];
            }
        }
        let mut v: Vec<i64> = y.iter().map(|e| e.floor() as i64).collect();
        let mut f: Vec<f64> = y.iter().zip(&v).map(|(e, b)| e - *b as f64).collect();
        for i in 0..d {
            if v[i] >= self.n as i64 {
                v[i] = self.n as i64;
                f[i] = 0.0;
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
        let to_node = |v: &[i64]| -> usize {
            let mut counts = vec![0u32; x];
            counts[0] = (self.n as i64 - v[0]) as u32;
            for i in 1..d {
                counts[i] = (v[i - 1] - v[i]) as u32;
            }
            counts[d] = v[d - 1] as u32;
            self.node_of(&counts)
        };
        let mut out = Vec::with_capacity(x);
        let w0 = 1.0 - f[order[0]];
        if w0 > 0.0 {
            out.push((to_node(&v), w0));
        }
        for k in 0..d {
            v[order[k]] += 1;
            let w = if k + 1 < d { f[order[k]] - f[order[k + 1]] } else { f[order[k]] };
            if w > 0.0 {
                out.push((to_node(&v), w));
            }
        }
        out
    }

    pub fn interpolate(&self, values: &[f64], pi: &[f64], interp: Interp) -> f64 {
        self.stencil(pi, interp).iter().map(|(k, w)| w * values[*k]).sum()
    }
}

#[derive(Debug, Clone)]
struct Entry {
    cost: f64,
    next: Vec<(usize, f64)>,
}

/// Grid dynamic programming over a [`BeliefProblem`].
pub struct GridSolver<'a, P: BeliefProblem + ?Sized> {
    pub problem: &'a P,
    pub grid: SimplexGrid,
    pub interp: Interp,
    table: Vec<Vec<Entry>>,
    terminal: Vec<f64>,
}

/// Solved grid values. `next` is the value table used for one-step lookahead at time 0.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub values: Vec<f64>,
    pub next: Vec<f64>,
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
}

fn merge(mut v: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (k, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += w,
            _ => out.push((k, w)),
        }
    }
    out
}

impl<'a, P: BeliefProblem + ?Sized> GridSolver<'a, P> {
    pub fn new(problem: &'a P, resolution: usize, interp: Interp) -> Self {
        let grid = SimplexGrid::new(problem.num_states(), resolution.max(1));
        let u = problem.num_actions();
        let table: Vec<Vec<Entry>> = grid
            .nodes
            .par_iter()
            .map(|pi| {
                (0..u)
                    .map(|a| {
                        let mut next = Vec::new();
                        for (p, b) in problem.successors(pi, a) {
                            for (k, w) in grid.stencil(&b, interp) {
                                next.push((k, p * w));
                            }
                        }
                        Entry { cost: problem.cost(pi, a), next: merge(next) }
                    })
                    .collect()
            })
            .collect();
        let terminal = grid.nodes.iter().map(|pi| problem.terminal_cost(pi)).collect();
        GridSolver { problem, grid, interp, table, terminal }
    }

    fn backup(&self, v: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let rho = self.problem.discount();
        self.table
            .par_iter()
            .map(|row| {
                let mut best = f64::INFINITY;
                let mut arg = 0;
                for (a, e) in row.iter().enumerate() {
                    let q = e.cost + rho * e.next.iter().map(|(k, w)| w * v[*k]).sum::<f64>();
                    if q < best - 1e-12 {
                        best = q;
                        arg = a;
                    }
                }
                (best, arg)
            })
            .unzip()
    }

    /// `n` backward stages from the terminal cost.
    pub fn solve_finite(&self, n: usize) -> GridSolution {
        let mut v = self.terminal.clone();
        let mut prev = v.clone();
        let mut policy = vec![0; v.len()];
        for _ in 0..n {
            let (nv, mu) = self.backup(&v);
            prev = std::mem::replace(&mut v, nv);
            policy = mu;
        }
        GridSolution { values: v, next: prev, policy, iterations: n, residual: 0.0 }
    }

    /// Iterates from zero until successive grid tables differ by at most `eps`.
    pub fn solve_discounted(&self, eps: f64, max_iter: usize) -> Result<GridSolution> {
        let mut v = vec![0.0; self.grid.len()];
        for it in 1..=max_iter {
            let (nv, mu) = self.backup(&v);
            let diff = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = nv;
            if diff <= eps {
                return Ok(GridSolution { values: v.clone(), next: v, policy: mu, iterations: it, residual: diff });
            }
        }
        Err(Error::Invalid(format!("grid iteration did not reach {eps} in {max_iter} iterations")))
    }

    /// Value of a fixed policy by iterating its grid recursion.
    pub fn evaluate_policy(&self, policy: &(dyn Fn(&[f64]) -> usize + Sync), eps: f64, max_iter: usize) -> Result<Vec<f64>> {
        let rho = self.problem.discount();
        let acts: Vec<usize> = self.grid.nodes.iter().map(|pi| policy(pi)).collect();
        let mut v = vec![0.0; self.grid.len()];
        for _ in 0..max_iter {
            let nv: Vec<f64> = self
                .table
                .par_iter()
                .zip(&acts)
                .map(|(row, &a)| row[a].cost + rho * row[a].next.iter().map(|(k, w)| w * v[*k]).sum::<f64>())
                .collect();
            let diff = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = nv;
            if diff <= eps {
                return Ok(v);
            }
        }
        Err(Error::Invalid("policy evaluation did not converge".into()))
    }

    pub fn value(&self, sol: &GridSolution, pi: &[f64]) -> f64 {
        self.grid.interpolate(&sol.values, pi, self.interp)
    }

    /// One-step lookahead Q-values at an arbitrary belief.
    pub fn q_values(&self, sol: &GridSolution, pi: &[f64]) -> Vec<f64> {
        let rho = self.problem.discount();
        (0..self.problem.num_actions())
            .map(|a| {
                let fut: f64 = self
                    .problem
                    .successors(pi, a)
                    .iter()
                    .map(|(p, b)| p * self.grid.interpolate(&sol.next, b, self.interp))
                    .sum();
                self.problem.cost(pi, a) + rho * fut
            })
            .collect()
    }

    /// Greedy action at an arbitrary belief (ties to the lowest action).
    pub fn greedy(&self, sol: &GridSolution, pi: &[f64]) -> usize {
        argmin_low(&self.q_values(sol, pi))
    }
}

/// Lowest index attaining the minimum within 1e-12.
pub fn argmin_low(q: &[f64]) -> usize {
    let mut arg = 0;
    for (a, v) in q.iter().enumerate() {
        if *v < q[arg] - 1e-12 {
            arg = a;
        }
    }
    arg
}

/// How long the grid oracle runs.
#[derive(Debug, Clone, Copy)]
pub enum Horizon {
    Finite(usize),
    Discounted(f64),
}

/// Grid oracle with the default interpolation (linear for X = 2, nearest otherwise).
pub fn grid_value_oracle<P: BeliefProblem + ?Sized>(problem: &P, resolution: usize, horizon: Horizon) -> Result<(GridSolver<'_, P>, GridSolution)> {
    let solver = GridSolver::new(problem, resolution, Interp::default_for(problem.num_states()));
    let sol = match horizon {
        Horizon::Finite(n) => solver.solve_finite(n),
        Horizon::Discounted(eps) => solver.solve_discounted(eps, 100_000)?,
    };
    Ok((solver, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Matrix;

    #[test]
    fn grid_counts_and_order() {
        let g = SimplexGrid::new(3, 4);
        assert_eq!(g.len(), 15);
        assert_eq!(g.nodes[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(*g.nodes.last().unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn freudenthal_reproduces_linear_functions() {
        let g = SimplexGrid::new(4, 7);
        let lin = [1.5, -2.0, 0.3, 4.0];
        let vals: Vec<f64> = g.nodes.iter().map(|p| dot(p, &lin)).collect();
        let pi = [0.13, 0.41, 0.07, 0.39];
        let st = g.stencil(&pi, Interp::Linear);
        assert!((st.iter().map(|s| s.1).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((g.interpolate(&vals, &pi, Interp::Linear) - dot(&pi, &lin)).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_table_is_zero() {
        let m = PomdpModel::new(vec![Matrix::identity(2)], vec![Matrix::identity(2)], Matrix::zeros(2, 1), 0.9).unwrap();
        let s = GridSolver::new(&m, 20, Interp::Linear);
        assert!(s.solve_discounted(1e-9, 100).unwrap().values.iter().all(|v| *v == 0.0));
        assert!(s.solve_finite(0).values.iter().all(|v| *v == 0.0));
    }
}
