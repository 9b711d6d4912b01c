//! Linear threshold stopping policies fitted by simultaneous perturbation.

use crate::filters::filter_with;
use crate::model::{dot, rng, sample_index, sample_simplex, shard_rng, StoppingModel};
use crate::orders::{OrderVerdict, Witness};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Action of `θ` at `π`: 0 (stop) iff `π(2) + Σ_i θ(i)π(i+2) < θ(X−1)`, else 1.
pub fn linear_threshold_action(theta: &[f64], pi: &[f64]) -> usize {
    let x = pi.len();
    let mut s = pi[1];
    for i in 0..x - 2 {
        s += theta[i] * pi[i + 2];
    }
    usize::from(s >= theta[x - 2])
}

/// Maps unconstrained `φ` to a `θ` satisfying [`check_theta`].
pub fn spherical_to_theta(phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    if n == 1 {
        return vec![phi[0] * phi[0]];
    }
    let top = 1.0 + phi[n - 2] * phi[n - 2];
    let mut theta: Vec<f64> = phi[..n - 2].iter().map(|p| top * p.sin().powi(2)).collect();
    theta.push(top);
    theta.push(phi[n - 1] * phi[n - 1]);
    theta
}

/// `0 ≤ θ(i) ≤ θ(X−2)`, `θ(X−2) ≥ 1`, `θ(X−1) > 0`. Fails carries the 1-based index.
/// A zero last coordinate is tolerated, matching `φ(X−1) = 0`.
pub fn check_theta(theta: &[f64]) -> OrderVerdict {
    let n = theta.len();
    let tol = 1e-12;
    if n == 1 {
        return if theta[0] < 0.0 { OrderVerdict::fails_at(vec![1]) } else { OrderVerdict::holds() };
    }
    for i in 0..n - 2 {
        if theta[i] < -tol || theta[i] > theta[n - 2] + tol {
            return OrderVerdict::fails_at(vec![i + 1]);
        }
    }
    if theta[n - 2] < 1.0 - tol {
        return OrderVerdict::fails_at(vec![n - 1]);
    }
    if theta[n - 1] < 0.0 {
        return OrderVerdict::fails(Witness::Indices { indices: vec![n] });
    }
    OrderVerdict::holds()
}

/// Number of stages after which the discounted tail is below 1e-6.
pub fn truncation(model: &StoppingModel, horizon: usize) -> usize {
    let cmax = model.continue_cost.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if model.rho >= 1.0 {
        return horizon;
    }
    let k = ((1e-6 * (1.0 - model.rho) / cmax).ln() / model.rho.ln()).ceil();
    horizon.min(k.max(1.0) as usize)
}

/// One sampled discounted cost from `pi0` (uniform on the simplex when `None`).
pub fn sample_cost(model: &StoppingModel, policy: &dyn Fn(&[f64]) -> usize, pi0: Option<&[f64]>, horizon: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = model.num_states();
    let mut pi = pi0.map_or_else(|| sample_simplex(&mut r, n), <[f64]>::to_vec);
    let mut x = sample_index(&mut r, &pi);
    let mut total = 0.0;
    let mut disc = 1.0;
    for _ in 0..truncation(model, horizon) {
        if policy(&pi) == 0 {
            return total + disc * model.stop_cost.eval(&pi);
        }
        total += disc * dot(&model.continue_cost, &pi);
        disc *= model.rho;
        x = sample_index(&mut r, model.p.row(x));
        let y = sample_index(&mut r, model.b.row(x));
        match filter_with(&model.p, &model.b, &pi, y) {
            Ok(s) => pi = s.posterior,
            Err(_) => break,
        }
    }
    total
}

/// Mean of `paths` sampled costs with seeds derived from `seed`.
pub fn mean_cost(model: &StoppingModel, policy: &(dyn Fn(&[f64]) -> usize + Sync), paths: usize, horizon: usize, seed: u64) -> f64 {
    let s: f64 = (0..paths)
        .into_par_iter()
        .map(|k| sample_cost(model, policy, None, horizon, seed.wrapping_mul(1_000_003).wrapping_add(k as u64)))
        .sum();
    s / paths as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsaHyper {
    pub delta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub zeta: f64,
    pub s: f64,
    pub restarts: usize,
    /// Sample paths averaged per cost evaluation.
    pub batch: usize,
    pub horizon: usize,
}

impl Default for SpsaHyper {
    fn default() -> Self {
        SpsaHyper { delta: 0.1, gamma: 0.602, eps: 0.01, zeta: 0.602, s: 10.0, restarts: 5, batch: 100, horizon: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct SpsaTrace {
    pub phi: Vec<Vec<f64>>,
    pub cost: Vec<f64>,
}

impl SpsaTrace {
    pub fn last(&self) -> &[f64] {
        self.phi.last().expect("nonempty trace")
    }

    /// `n,phi_1..,cost`.
    pub fn to_csv(&self) -> String {
        let d = self.phi.first().map_or(0, Vec::len);
        let mut s = String::from("n");
        for i in 1..=d {
            s += &format!(",phi_{i}");
        }
        s += ",cost\n";
        for (n, (p, c)) in self.phi.iter().zip(&self.cost).enumerate() {
            s += &n.to_string();
            for v in p {
                s += &format!(",{}", crate::fmt12(*v));
            }
            s += &format!(",{}\n", crate::fmt12(*c));
        }
        s
    }
}

/// Two-measurement SPSA on `objective(φ, seed)`. Both perturbed evaluations of
/// an iteration share a seed.
pub fn spsa_minimize(objective: &dyn Fn(&[f64], u64) -> f64, phi0: &[f64], iterations: usize, seed: u64, h: &SpsaHyper) -> SpsaTrace {
    let mut r = rng(seed);
    let mut phi = phi0.to_vec();
    let mut trace = SpsaTrace { phi: vec![phi.clone()], cost: vec![objective(&phi, r.random())] };
    for n in 0..iterations {
        let dn = h.delta / ((n + 1) as f64).powf(h.gamma);
        let en = h.eps / ((n + 2) as f64 + h.s).powf(h.zeta);
        let w: Vec<f64> = phi.iter().map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let s: u64 = r.random();
        let plus: Vec<f64> = phi.iter().zip(&w).map(|(p, d)| p + dn * d).collect();
        let minus: Vec<f64> = phi.iter().zip(&w).map(|(p, d)| p - dn * d).collect();
        let g = (objective(&plus, s) - objective(&minus, s)) / (2.0 * dn);
        for (p, d) in phi.iter_mut().zip(&w) {
            *p -= en * g * d;
        }
        trace.phi.push(phi.clone());
        trace.cost.push(objective(&phi, r.random()));
    }
    trace
}

#[derive(Debug, Clone)]
pub struct SpsaFit {
    pub traces: Vec<SpsaTrace>,
    pub best: usize,
    pub theta: Vec<f64>,
    /// Cost of each restart's final iterate under a common evaluation seed.
    pub final_costs: Vec<f64>,
}

/// Fits a linear threshold policy with `h.restarts` independent restarts.
pub fn spsa_fit(model: &StoppingModel, iterations: usize, seed: u64, h: &SpsaHyper) -> SpsaFit {
    let x = model.num_states();
    let objective = |phi: &[f64], s: u64| {
        let theta = spherical_to_theta(phi);
        mean_cost(model, &|pi: &[f64]| linear_threshold_action(&theta, pi), h.batch, h.horizon, s)
    };
    let traces: Vec<SpsaTrace> = (0..h.restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut r = shard_rng(seed, k as u64);
            let phi0: Vec<f64> = (0..x - 1).map(|_| StandardNormal.sample(&mut r)).collect();
            spsa_minimize(&objective, &phi0, iterations, r.random(), h)
        })
        .collect();
    let eval_seed = seed ^ 0x5eed;
    let final_costs: Vec<f64> = traces.iter().map(|t| objective(t.last(), eval_seed)).collect();
    let best = crate::solver::grid::argmin_low(&final_costs);
    let theta = spherical_to_theta(traces[best].last());
    SpsaFit { traces, best, theta, final_costs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(linear_threshold_action(&[1.0, 1.0], &[1.0, 0.0, 0.0]), 0);
        assert_eq!(linear_threshold_action(&[1.0, 1.0], &[0.0, 0.0, 1.0]), 1);
        assert_eq!(spherical_to_theta(&[0.0, 1.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn spherical_always_feasible() {
        let mut r = rng(4);
        for _ in 0..1000 {
            let phi: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut r)).collect();
            assert!(check_theta(&spherical_to_theta(&phi)).is_holds());
        }
        assert!(check_theta(&[2.0, 1.5, 0.3]).is_fails());
        // Two states: a plain threshold on π(2).
        assert_eq!(spherical_to_theta(&[-0.5]), vec![0.25]);
        assert!(check_theta(&[0.25]).is_holds());
        assert_eq!(linear_threshold_action(&[0.25], &[0.9, 0.1]), 0);
    }

    #[test]
    fn quadratic_objective_converges() {
        let target = [0.7, -1.2, 2.0];
        let obj = |p: &[f64], _: u64| p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let h = SpsaHyper { eps: 0.2, ..SpsaHyper::default() };
        let t = spsa_minimize(&obj, &[0.0, 0.0, 0.0], 5000, 1, &h);
        for (a, b) in t.last().iter().zip(&target) {
            assert!((a - b).abs() < 1e-2, "{:?}", t.last());
        }
        let flat = spsa_minimize(&|_: &[f64], _| 1.0, &[0.3, 0.4], 100, 1, &h);
        assert_eq!(flat.last(), &[0.3, 0.4]);
    }
}
