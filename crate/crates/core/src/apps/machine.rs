use crate::error::{Error, Result};
use crate::model::{Matrix, PomdpModel};

/// Two-state machine replacement. State 1 is worn, state 2 is new; action 1
/// (index 0) replaces and action 2 (index 1) keeps operating.
pub fn build_machine_replacement(theta: f64, p: f64, q: f64, replace: f64, op_costs: [f64; 2], rho: f64) -> Result<PomdpModel> {
    for (name, v) in [("theta", theta), ("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidProbability(format!("{name} = {v}")));
        }
    }
    let p_replace = Matrix::new(&[[0.0, 1.0], [0.0, 1.0]]);
    let p_keep = Matrix::new(&[[1.0, 0.0], [theta, 1.0 - theta]]);
    let b = Matrix::new(&[[p, 1.0 - p], [1.0 - q, q]]);
    let c = Matrix::new(&[[replace, op_costs[0]], [replace, op_costs[1]]]);
    PomdpModel::new(vec![p_replace, p_keep], vec![b.clone(), b], c, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_as_printed() {
        let m = build_machine_replacement(0.2, 0.9, 0.8, 4.0, [3.0, 0.0], 0.9).unwrap();
        assert_eq!(m.p[1].to_rows(), vec![vec![1.0, 0.0], vec![0.2, 0.8]]);
        assert_eq!(m.p[0].to_rows(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert!((m.b[0][(1, 0)] - 0.2).abs() < 1e-15);
        assert_eq!(m.c.col(0), vec![4.0, 4.0]);
        let still = build_machine_replacement(0.0, 0.9, 0.8, 4.0, [3.0, 0.0], 0.9).unwrap();
        assert_eq!(still.p[1], Matrix::identity(2));
        assert!(build_machine_replacement(1.5, 0.9, 0.8, 4.0, [3.0, 0.0], 0.9).is_err());
    }
}
