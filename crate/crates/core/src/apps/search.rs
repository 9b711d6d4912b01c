//! Search for a moving target, recast as a POMDP on `2X + 1` augmented
//! states `(F̄,1..X), (b,1..X), T`. Observation indices: 0 = F̄ (not found),
//! 1 = b (blocked), 2 = F (found).

use crate::error::{Error, Result};
use crate::model::{Matrix, PomdpModel, RawModel};

#[derive(Debug, Clone, PartialEq)]
pub enum SearchCost {
    /// Reward of detection, `c(j,u) = −P(F | j, u)`.
    MaxDetection,
    /// Unit cost per search until detection.
    MinDelay,
    /// Cost depending on the action only.
    MinCost(Vec<f64>),
}

/// `P(y | x = j, u)` for the three observations, per cell.
pub fn search_likelihoods(x: usize, cells: &[usize], overlook: f64, blocking: f64) -> Vec<[f64; 3]> {
    (0..x)
        .map(|j| {
            let hit = cells.contains(&j);
            let found = if hit { (1.0 - blocking) * (1.0 - overlook) } else { 0.0 };
            let missed = if hit { overlook * (1.0 - blocking) } else { 1.0 - blocking };
            [missed, blocking, found]
        })
        .collect()
}

/// `searched[u]` lists the cells (0-based) inspected by action `u`.
pub fn build_search_pomdp(
    p: &Matrix,
    searched: &[Vec<usize>],
    overlook: &[f64],
    blocking: &[f64],
    cost: &SearchCost,
    rho: f64,
) -> Result<PomdpModel> {
    let x = p.rows();
    let u = searched.len();
    if p.cols() != x || overlook.len() != u || blocking.len() != u {
        return Err(Error::DimensionMismatch("search model dimensions".into()));
    }
    if let SearchCost::MinCost(c) = cost {
        if c.len() != u {
            return Err(Error::DimensionMismatch("search action costs".into()));
        }
    }
    for v in overlook.iter().chain(blocking) {
        if !(0.0..=1.0).contains(v) {
            return Err(Error::InvalidProbability(format!("overlook/blocking probability {v}")));
        }
    }
    if searched.iter().flatten().any(|&j| j >= x) {
        return Err(Error::DimensionMismatch("searched cell out of range".into()));
    }
    let mut pt = p.clone();
    pt.make_stochastic(0)?;
    let n = 2 * x + 1;
    let t = 2 * x;
    let mut ps = Vec::with_capacity(u);
    let mut c = Matrix::zeros(n, u);
    for a in 0..u {
        let lik = search_likelihoods(x, &searched[a], overlook[a], blocking[a]);
        let mut m = Matrix::zeros(n, n);
        for blk in 0..2 {
            for i in 0..x {
                let s = blk * x + i;
                for j in 0..x {
                    m[(s, j)] = lik[i][0] * pt[(i, j)];
                    m[(s, x + j)] = lik[i][1] * pt[(i, j)];
                }
                m[(s, t)] = lik[i][2];
                c[(s, a)] = match cost {
                    SearchCost::MaxDetection => -lik[i][2],
                    SearchCost::MinDelay => 1.0,
                    SearchCost::MinCost(v) => v[a],
                };
            }
        }
        m[(t, t)] = 1.0;
        ps.push(m.to_rows());
    }
    let mut r = Matrix::zeros(n, 3);
    for i in 0..x {
        r[(i, 0)] = 1.0;
        r[(x + i, 1)] = 1.0;
    }
    r[(t, 2)] = 1.0;
    crate::model::validate_model(&RawModel {
        x: n,
        u,
        y: 3,
        p: ps,
        b: vec![r.to_rows(); u],
        c: c.to_rows(),
        rho,
        horizon: None,
        terminal: None,
        absorbing: Some(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::hmm_filter_step;

    #[test]
    fn perfect_search_detects() {
        let p = Matrix::new(&[[0.7, 0.3], [0.4, 0.6]]);
        let m = build_search_pomdp(&p, &[vec![0], vec![1]], &[0.0, 0.0], &[0.0, 0.0], &SearchCost::MinDelay, 1.0).unwrap();
        assert_eq!(m.x, 5);
        for u in 0..2 {
            assert!(m.p[u].is_stochastic());
        }
        let pi = [1.0, 0.0, 0.0, 0.0, 0.0];
        let s = hmm_filter_step(&pi, 2, 0, &m).unwrap();
        assert!((s.sigma - 1.0).abs() < 1e-15);
        assert_eq!(s.posterior, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn detection_reward() {
        let p = Matrix::identity(2);
        let m = build_search_pomdp(&p, &[vec![0], vec![1]], &[0.2, 0.1], &[0.5, 0.0], &SearchCost::MaxDetection, 0.9).unwrap();
        assert!((m.c[(0, 0)] + 0.4).abs() < 1e-15);
        assert_eq!(m.c[(1, 0)], 0.0);
        assert_eq!(m.c[(4, 1)], 0.0);
        assert!(build_search_pomdp(&p, &[vec![0]], &[1.2], &[0.0], &SearchCost::MinDelay, 0.9).is_err());
    }
}
