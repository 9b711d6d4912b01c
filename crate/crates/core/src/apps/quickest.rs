//! Quickest change detection with a phase-type change time.

use crate::error::{Error, Result};
use crate::model::{dot, Matrix, StopCost, StoppingModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayKind {
    /// `d e_1'P'π`: delay charged when the next state has changed.
    Predicted,
    /// `d e_1'π`.
    Classical,
}

/// Inputs of the change-detection problem. State 1 (index 0) is the
/// post-change absorbing state.
#[derive(Debug, Clone)]
pub struct QuickestParams {
    pub pi0: Vec<f64>,
    /// Transitions among pre-change states 2..X.
    pub pbar: Matrix,
    /// Jump probabilities from states 2..X into state 1.
    pub pcol: Vec<f64>,
    pub b: Matrix,
    pub d: f64,
    pub beta: f64,
    pub alpha: f64,
    /// False alarm penalties, `f_1 = 0`.
    pub f: Vec<f64>,
    /// Physical state levels used by the variance penalty.
    pub levels: Vec<f64>,
    pub delay: DelayKind,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct QuickestDetection {
    pub model: StoppingModel,
    pub pi0: Vec<f64>,
    pub params: QuickestParams,
}

fn transient(p: &Matrix) -> bool {
    // Every pre-change state must reach the absorbing state.
    let x = p.rows();
    let mut reach = vec![false; x];
    reach[0] = true;
    loop {
        let mut grew = false;
        for i in 1..x {
            if !reach[i] && (0..x).any(|j| reach[j] && p[(i, j)] > 0.0) {
                reach[i] = true;
                grew = true;
            }
        }
        if !grew {
            return reach.iter().all(|&r| r);
        }
    }
}

pub fn build_quickest_detection(params: QuickestParams) -> Result<QuickestDetection> {
    let m = params.pbar.rows();
    let x = m + 1;
    if params.pbar.cols() != m || params.pcol.len() != m || params.pi0.len() != x || params.b.rows() != x {
        return Err(Error::DimensionMismatch("change-time chain dimensions".into()));
    }
    if params.f.len() != x || params.levels.len() != x {
        return Err(Error::DimensionMismatch("false alarm or level vector".into()));
    }
    if params.pi0[0] != 0.0 {
        return Err(Error::PriorMassOnState1);
    }
    crate::model::check_belief(&params.pi0)?;
    let mut p = Matrix::zeros(x, x);
    p[(0, 0)] = 1.0;
    for i in 0..m {
        p[(i + 1, 0)] = params.pcol[i];
        for j in 0..m {
            p[(i + 1, j + 1)] = params.pbar[(i, j)];
        }
    }
    p.make_stochastic(1)?;
    if !transient(&p) {
        return Err(Error::NonTransient);
    }
    for i in 2..x {
        if params.b.row(i).iter().zip(params.b.row(1)).any(|(a, c)| (a - c).abs() > 1e-12) {
            return Err(Error::PreconditionFailed("pre-change observation rows must be identical".into()));
        }
    }
    if params.alpha < 0.0 || params.beta < 0.0 || params.d < 0.0 {
        return Err(Error::Invalid("alpha, beta and d must be nonnegative".into()));
    }
    let g: Vec<f64> = params.levels.iter().map(|h| h * h).collect();
    let phi: Vec<f64> = g.iter().zip(&params.f).map(|(g, f)| params.alpha * g + params.beta * f).collect();
    let stop = if params.alpha == 0.0 {
        StopCost::Linear(phi)
    } else {
        StopCost::Quadratic { phi, h: params.levels.clone(), alpha: params.alpha }
    };
    let cont = match params.delay {
        DelayKind::Predicted => p.col(0).iter().map(|v| params.d * v).collect(),
        DelayKind::Classical => {
            let mut c = vec![0.0; x];
            c[0] = params.d;
            c
        }
    };
    let model = StoppingModel::new(p, params.b.clone(), cont, stop, params.rho)?;
    Ok(QuickestDetection { model, pi0: params.pi0.clone(), params })
}

/// Kolmogorov–Shiryayev detection of disorder: geometric change with
/// `P(x_{k+1}=1 | x_k=2) = 1 − p22`, unit false alarm, delay `d`, ρ = 1.
pub fn build_classical_detection(p22: f64, b: Matrix, d: f64) -> Result<QuickestDetection> {
    build_quickest_detection(QuickestParams {
        pi0: vec![0.0, 1.0],
        pbar: Matrix::new(&[[p22]]),
        pcol: vec![1.0 - p22],
        b,
        d,
        beta: 1.0,
        alpha: 0.0,
        f: vec![0.0, 1.0],
        levels: vec![0.0, 0.0],
        delay: DelayKind::Classical,
        rho: 1.0,
    })
}

impl QuickestDetection {
    /// `ν_0 = π_0(1)` and `ν_k = π̄_0' P̄^{k−1} P̲` for `k = 1..=n`.
    pub fn absorption_pmf(&self, n: usize) -> Vec<f64> {
        let mut out = vec![self.pi0[0]];
        let mut row = self.pi0[1..].to_vec();
        for _ in 0..n {
            out.push(dot(&row, &self.params.pcol));
            row = self.params.pbar.tmul_vec(&row);
        }
        out
    }

    /// Equivalent model whose value is `V̄(π) − (α+β)f'π`; the optimal policy
    /// is the same.
    pub fn transformed(&self) -> Result<StoppingModel> {
        let q = &self.params;
        let m = &self.model;
        let ab = q.alpha + q.beta;
        let pf = m.p.mul_vec(&q.f);
        let cont: Vec<f64> = (0..m.num_states()).map(|i| m.continue_cost[i] - ab * q.f[i] + m.rho * ab * pf[i]).collect();
        let g: Vec<f64> = q.levels.iter().map(|h| h * h).collect();
        let phi: Vec<f64> = g.iter().zip(&q.f).map(|(g, f)| q.alpha * (g - f)).collect();
        let stop = if q.alpha == 0.0 {
            StopCost::Linear(phi)
        } else {
            StopCost::Quadratic { phi, h: q.levels.clone(), alpha: q.alpha }
        };
        StoppingModel::new(m.p.clone(), m.b.clone(), cont, stop, m.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ph() -> QuickestParams {
        QuickestParams {
            pi0: vec![0.0, 0.6, 0.4],
            pbar: Matrix::new(&[[0.8, 0.1], [0.0, 0.9]]),
            pcol: vec![0.1, 0.1],
            b: Matrix::new(&[[0.7, 0.3], [0.3, 0.7], [0.3, 0.7]]),
            d: 1.0,
            beta: 2.0,
            alpha: 0.5,
            f: vec![0.0, 1.0, 1.0],
            levels: vec![1.0, 0.0, 0.0],
            delay: DelayKind::Predicted,
            rho: 0.9,
        }
    }

    #[test]
    fn geometric_mean() {
        let qd = build_classical_detection(0.9, Matrix::new(&[[0.6, 0.4], [0.4, 0.6]]), 0.05).unwrap();
        let pmf = qd.absorption_pmf(2000);
        let mean: f64 = pmf.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        assert!((mean - 10.0).abs() < 1e-9);
        let StopCost::Linear(c) = &qd.model.stop_cost else { panic!() };
        assert_eq!(c, &vec![0.0, 1.0]);
        assert_eq!(qd.model.continue_cost, vec![0.05, 0.0]);
    }

    #[test]
    fn preconditions() {
        let mut q = ph();
        assert!(build_quickest_detection(q.clone()).is_ok());
        q.pi0 = vec![0.1, 0.5, 0.4];
        assert_eq!(build_quickest_detection(q).unwrap_err(), Error::PriorMassOnState1);
        let mut q = ph();
        q.pbar = Matrix::new(&[[0.9, 0.0], [0.0, 1.0]]);
        q.pcol = vec![0.1, 0.0];
        assert_eq!(build_quickest_detection(q).unwrap_err(), Error::NonTransient);
        let mut q = ph();
        q.b = Matrix::new(&[[0.7, 0.3], [0.3, 0.7], [0.4, 0.6]]);
        assert!(matches!(build_quickest_detection(q), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn transformed_costs_shift_by_f() {
        let qd = build_quickest_detection(ph()).unwrap();
        let t = qd.transformed().unwrap();
        let pi = [0.2, 0.5, 0.3];
        let shift = (qd.params.alpha + qd.params.beta) * dot(&qd.params.f, &pi);
        assert!((t.stop_cost.eval(&pi) - (qd.model.stop_cost.eval(&pi) - shift)).abs() < 1e-12);
    }
}
