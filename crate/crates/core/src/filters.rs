//! Belief recursions: HMM filter and predictor, social-learning filter,
//! risk-sensitive update and seeded trajectory simulation.

use crate::error::{Error, Result};
use crate::model::{rng, sample_index, Matrix, PomdpModel};

/// Likelihood at or below this means the observation is impossible.
pub const ZERO_LIKELIHOOD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub posterior: Vec<f64>,
    pub sigma: f64,
}

/// Unnormalized update `B_y P' π` for explicit matrices.
pub fn unnormalized(p: &Matrix, b: &Matrix, pi: &[f64], y: usize) -> Vec<f64> {
    let mut v = p.tmul_vec(pi);
    for (j, e) in v.iter_mut().enumerate() {
        *e *= b[(j, y)];
    }
    v
}

fn normalize(v: Vec<f64>) -> Result<FilterStep> {
    let sigma: f64 = v.iter().sum();
    if !(sigma > ZERO_LIKELIHOOD) {
        return Err(Error::ZeroLikelihood(sigma));
    }
    Ok(FilterStep { posterior: v.into_iter().map(|e| e / sigma).collect(), sigma })
}

/// `T(π,y) = B_y P'π / σ` for explicit matrices.
pub fn filter_with(p: &Matrix, b: &Matrix, pi: &[f64], y: usize) -> Result<FilterStep> {
    normalize(unnormalized(p, b, pi, y))
}

/// HMM filter step `T(π,y,u)`.
pub fn hmm_filter_step(pi: &[f64], y: usize, u: usize, model: &PomdpModel) -> Result<FilterStep> {
    check_dims(pi, model)?;
    if y >= model.y || u >= model.u {
        return Err(Error::DimensionMismatch(format!("observation {} or action {} out of range", y + 1, u + 1)));
    }
    filter_with(&model.p[u], &model.b[u], pi, y)
}

/// Predictor `P'(u)π`.
pub fn hmm_predictor_step(pi: &[f64], u: usize, model: &PomdpModel) -> Result<Vec<f64>> {
    check_dims(pi, model)?;
    Ok(model.p[u].tmul_vec(pi))
}

/// `σ(π,y,u)` for every `y`.
pub fn normalizer_vector(pi: &[f64], u: usize, model: &PomdpModel) -> Result<Vec<f64>> {
    check_dims(pi, model)?;
    Ok(normalizers_with(&model.p[u], &model.b[u], pi))
}

pub fn normalizers_with(p: &Matrix, b: &Matrix, pi: &[f64]) -> Vec<f64> {
    b.tmul_vec(&p.tmul_vec(pi))
}

fn check_dims(pi: &[f64], model: &PomdpModel) -> Result<()> {
    if pi.len() != model.x {
        return Err(Error::DimensionMismatch(format!("belief has {} entries, model has {} states", pi.len(), model.x)));
    }
    Ok(())
}

/// Myopic local action `argmin_a c_a'η`, ties to the smaller index.
/// `local_costs` is X×A.
pub fn myopic_action(local_costs: &Matrix, eta: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for a in 0..local_costs.cols() {
        let v: f64 = (0..eta.len()).map(|i| local_costs[(i, a)] * eta[i]).sum();
        if v < best_v {
            best_v = v;
            best = a;
        }
    }
    best
}

/// Action likelihoods `P(a | x = e_i, π)` as an X×A matrix.
pub fn action_likelihoods(pi: &[f64], local_costs: &Matrix, b: &Matrix) -> Matrix {
    let x = pi.len();
    let mut out = Matrix::zeros(x, local_costs.cols());
    for y in 0..b.cols() {
        let eta: Vec<f64> = (0..x).map(|i| b[(i, y)] * pi[i]).collect();
        if eta.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let a = myopic_action(local_costs, &eta);
        for i in 0..x {
            out[(i, a)] += b[(i, y)];
        }
    }
    out
}

/// Public-belief update after observing local action `a`.
pub fn social_learning_step(pi: &[f64], a: usize, local_costs: &Matrix, b: &Matrix) -> Result<FilterStep> {
    if pi.len() != b.rows() || local_costs.rows() != pi.len() || a >= local_costs.cols() {
        return Err(Error::DimensionMismatch("social learning operands".into()));
    }
    let r = action_likelihoods(pi, local_costs, b);
    normalize((0..pi.len()).map(|i| r[(i, a)] * pi[i]).collect())
}

/// Risk-sensitive update `B_y P' diag(r2) π / normalizer`.
pub fn risk_sensitive_step(pi: &[f64], y: usize, p: &Matrix, b: &Matrix, r2: &[f64]) -> Result<FilterStep> {
    if r2.len() != pi.len() || r2.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Invalid("risk weights must be positive with one per state".into()));
    }
    let w: Vec<f64> = pi.iter().zip(r2).map(|(a, b)| a * b).collect();
    filter_with(p, b, &w, y)
}

/// One simulated path. Observation `0` slot at `k = 0` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub observations: Vec<Option<usize>>,
    pub actions: Vec<usize>,
    pub beliefs: Vec<Vec<f64>>,
    /// Discounted cost accumulated before acting at each step.
    pub cost_to_date: Vec<f64>,
    pub cost: f64,
}

impl Trajectory {
    /// CSV with 1-based indices: `k,x,y,u,pi_1..pi_X,cost`.
    pub fn to_csv(&self) -> String {
        let x = self.beliefs.first().map_or(0, |b| b.len());
        let mut s = String::from("k,x,y,u");
        for i in 1..=x {
            s.push_str(&format!(",pi_{i}"));
        }
        s.push_str(",cost\n");
        for k in 0..self.actions.len() {
            s.push_str(&format!(
                "{},{},{},{}",
                k,
                self.states[k] + 1,
                self.observations[k].map_or(0, |y| y + 1),
                self.actions[k] + 1
            ));
            for v in &self.beliefs[k] {
                s.push_str(&format!(",{}", crate::fmt12(*v)));
            }
            s.push_str(&format!(",{}\n", crate::fmt12(self.cost_to_date[k])));
        }
        s
    }
}

/// Simulates `horizon` decisions of `policy(k, π)` from a state drawn from `pi0`.
pub fn simulate_trajectory(
    model: &PomdpModel,
    pi0: &[f64],
    policy: &dyn Fn(usize, &[f64]) -> usize,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    check_dims(pi0, model)?;
    let mut r = rng(seed);
    let mut x = sample_index(&mut r, pi0);
    let mut pi = pi0.to_vec();
    let mut t = Trajectory {
        states: Vec::with_capacity(horizon + 1),
        observations: vec![None],
        actions: Vec::with_capacity(horizon),
        beliefs: Vec::with_capacity(horizon + 1),
        cost_to_date: Vec::with_capacity(horizon),
        cost: 0.0,
    };
    let mut disc = 1.0;
    for k in 0..horizon {
        let u = policy(k, &pi);
        t.states.push(x);
        t.beliefs.push(pi.clone());
        t.actions.push(u);
        t.cost_to_date.push(t.cost);
        t.cost += disc * model.c[(x, u)];
        disc *= model.rho;
        x = sample_index(&mut r, model.p[u].row(x));
        let y = sample_index(&mut r, model.b[u].row(x));
        pi = hmm_filter_step(&pi, y, u, model)?.posterior;
        t.observations.push(Some(y));
    }
    t.states.push(x);
    t.beliefs.push(pi);
    if model.horizon.is_some() {
        t.cost += disc * model.terminal_cost()[x];
    }
    Ok(t)
}

/// Expected instantaneous cost `c_u'π`.
pub fn expected_cost(model: &PomdpModel, pi: &[f64], u: usize) -> f64 {
    (0..model.x).map(|i| model.c[(i, u)] * pi[i]).sum()
}

/// `Σ_y V(T(π,y,u)) σ(π,y,u)` for an arbitrary value function.
pub fn expected_next_value(p: &Matrix, b: &Matrix, pi: &[f64], v: &dyn Fn(&[f64]) -> f64) -> f64 {
    let pred = p.tmul_vec(pi);
    let mut acc = 0.0;
    for y in 0..b.cols() {
        let un: Vec<f64> = pred.iter().enumerate().map(|(j, e)| e * b[(j, y)]).collect();
        let s: f64 = un.iter().sum();
        if s > ZERO_LIKELIHOOD {
            let post: Vec<f64> = un.iter().map(|e| e / s).collect();
            acc += s * v(&post);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> Matrix {
        Matrix::new(&[[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.1, 0.3, 0.6]])
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn printed_filter_updates() {
        let m = PomdpModel::new(vec![p1()], vec![p1()], Matrix::zeros(3, 1), 0.9).unwrap();
        let pi = [0.2, 0.2, 0.6];
        let t1 = hmm_filter_step(&pi, 0, 0, &m).unwrap();
        assert!(close(&t1.posterior, &[0.5410, 0.2787, 0.1803], 5e-5), "{:?}", t1.posterior);
        let t2 = hmm_filter_step(&pi, 1, 0, &m).unwrap();
        assert!(close(&t2.posterior, &[0.1793, 0.4620, 0.3587], 5e-5), "{:?}", t2.posterior);
        let s = normalizer_vector(&pi, 0, &m).unwrap();
        assert!(close(&s, &[0.2440, 0.3680, 0.3880], 5e-5));
    }

    #[test]
    fn noninformative_update() {
        let m = PomdpModel::new(vec![Matrix::identity(3)], vec![Matrix::filled(3, 4, 0.25)], Matrix::zeros(3, 1), 0.9).unwrap();
        let pi = [0.1, 0.3, 0.6];
        let t = hmm_filter_step(&pi, 2, 0, &m).unwrap();
        assert!(close(&t.posterior, &pi, 1e-15));
        assert!((t.sigma - 0.25).abs() < 1e-15);
    }

    #[test]
    fn impossible_observation() {
        let m = PomdpModel::new(vec![Matrix::identity(2)], vec![Matrix::identity(2)], Matrix::zeros(2, 1), 0.9).unwrap();
        assert!(matches!(hmm_filter_step(&[1.0, 0.0], 1, 0, &m), Err(Error::ZeroLikelihood(_))));
    }

    #[test]
    fn fosd_not_closed_under_bayes() {
        let b = Matrix::new(&[[1.0, 0.0], [0.5, 0.5], [0.5, 0.5]]);
        let p = Matrix::identity(3);
        let third = 1.0 / 3.0;
        let a = filter_with(&p, &b, &[third, third, third], 1).unwrap().posterior;
        let c = filter_with(&p, &b, &[0.0, 2.0 * third, third], 1).unwrap().posterior;
        assert!(close(&a, &[0.0, 0.5, 0.5], 1e-15));
        assert!(close(&c, &[0.0, 2.0 / 3.0, 1.0 / 3.0], 1e-15));
    }

    #[test]
    fn risk_weights_of_one_give_hmm_filter() {
        let pi = [0.2, 0.2, 0.6];
        let a = risk_sensitive_step(&pi, 1, &p1(), &p1(), &[1.0; 3]).unwrap();
        let b = filter_with(&p1(), &p1(), &pi, 1).unwrap();
        assert!(close(&a.posterior, &b.posterior, 1e-15));
    }

    #[test]
    fn single_local_action_carries_no_information() {
        let costs = Matrix::new(&[[1.0], [2.0]]);
        let b = Matrix::new(&[[0.9, 0.1], [0.1, 0.9]]);
        let t = social_learning_step(&[0.3, 0.7], 0, &costs, &b).unwrap();
        assert!(close(&t.posterior, &[0.3, 0.7], 1e-15));
    }

    #[test]
    fn seeded_simulation_repeats() {
        let m = PomdpModel::new(vec![p1()], vec![p1()], Matrix::new(&[[1.0], [2.0], [3.0]]), 0.9).unwrap();
        let pol = |_: usize, _: &[f64]| 0usize;
        let a = simulate_trajectory(&m, &[1.0, 0.0, 0.0], &pol, 50, 7).unwrap();
        let b = simulate_trajectory(&m, &[1.0, 0.0, 0.0], &pol, 50, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv().lines().count(), 51);
    }
}
