//! Dominating transition matrices and the MLR sandwich filter.

use crate::error::{Error, Result};
use crate::filters::ZERO_LIKELIHOOD;
use crate::lp::{Lp, LpOutcome, Relation};
use crate::model::Matrix;
use crate::orders::{is_tp2, mlr_compare, Witness};

/// Tightest rank-1 bounds of a TP2 matrix: rows all equal to the first
/// (lower) or last (upper) row.
pub fn rank1_bounds(p: &Matrix) -> Result<(Matrix, Matrix)> {
    let v = is_tp2(p);
    if let Some(Witness::Minor { i1, i2, j1, j2, value }) = v.witness {
        return Err(Error::NotTP2 { i1, i2, j1, j2, minor: value });
    }
    let x = p.rows();
    Ok((Matrix::repeat_row(p.row(0), x), Matrix::repeat_row(p.row(x - 1), x)))
}

/// Best row `q` (minimum total deviation) with `‖P_i − q‖_1 ≤ ε` for every row in
/// `group`, subject to `q ≤r anchor` (`lower`) or `q ≥r anchor`.
fn fit_row(p: &Matrix, group: &[usize], anchor: &[f64], eps: f64, lower: bool) -> Result<Vec<f64>> {
    let x = p.cols();
    let g = group.len();
    // Variables: q (x), then one deviation block d (x) per member row.
    let nv = x + g * x;
    let mut obj = vec![0.0; nv];
    obj[x..].iter_mut().for_each(|v| *v = 1.0);
    let mut lp = Lp::minimize(obj);
    let mut row = vec![0.0; nv];
    row[..x].iter_mut().for_each(|v| *v = 1.0);
    lp.add(row, Relation::Eq, 1.0);
    for (k, &i) in group.iter().enumerate() {
        let base = x + k * x;
        for j in 0..x {
            // d ≥ P_ij − q_j and d ≥ q_j − P_ij
            let mut a = vec![0.0; nv];
            a[base + j] = 1.0;
            a[j] = 1.0;
            lp.add(a, Relation::Ge, p[(i, j)]);
            let mut b = vec![0.0; nv];
            b[base + j] = 1.0;
            b[j] = -1.0;
            lp.add(b, Relation::Ge, -p[(i, j)]);
        }
        let mut s = vec![0.0; nv];
        s[base..base + x].iter_mut().for_each(|v| *v = 1.0);
        lp.add(s, Relation::Le, eps);
    }
    for k in 0..x {
        for l in k + 1..x {
            // q ≤r a: a(k) q(l) ≤ q(k) a(l). q ≥r a: q(k) a(l) ≤ a(k) q(l).
            let mut c = vec![0.0; nv];
            if lower {
                c[l] = anchor[k];
                c[k] = -anchor[l];
            } else {
                c[k] = anchor[l];
                c[l] = -anchor[k];
            }
            lp.add(c, Relation::Le, 0.0);
        }
    }
    match lp.solve()? {
        LpOutcome::Optimal { x: sol, .. } => {
            let mut q: Vec<f64> = sol[..x].iter().map(|v| v.max(0.0)).collect();
            let s: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= s);
            Ok(q)
        }
        LpOutcome::Infeasible => Err(Error::LpInfeasible(format!("no dominating row within eps = {eps}"))),
        LpOutcome::Unbounded => Err(Error::LpNumericFailure("row fit unbounded".into())),
    }
}

/// LP-constructed bounds with `‖P − P_lower‖ ≤ ε` row-wise in L1, lower rows
/// MLR-dominated by row 1 of `P`, upper rows dominating row X.
pub fn lp_bounds(p: &Matrix, eps: f64) -> Result<(Matrix, Matrix)> {
    lp_bounds_grouped(p, eps, p.rows())
}

/// As [`lp_bounds`] but with rows shared across `r` contiguous groups, giving rank ≤ r.
pub fn lp_bounds_grouped(p: &Matrix, eps: f64, r: usize) -> Result<(Matrix, Matrix)> {
    let x = p.rows();
    let r = r.clamp(1, x);
    let groups: Vec<Vec<usize>> = (0..r).map(|g| (g * x / r..(g + 1) * x / r).collect()).collect();
    let mut lo = Matrix::zeros(x, x);
    let mut hi = Matrix::zeros(x, x);
    for g in &groups {
        let ql = fit_row(p, g, p.row(0), eps, true)?;
        let qu = fit_row(p, g, p.row(x - 1), eps, false)?;
        for &i in g {
            lo.row_mut(i).copy_from_slice(&ql);
            hi.row_mut(i).copy_from_slice(&qu);
        }
    }
    Ok((lo, hi))
}

/// Transition matrix stored as `r` distinct rows plus a row-to-group map, so the
/// predictor costs `r·X` multiplications.
#[derive(Debug, Clone)]
pub struct GroupedPredictor {
    rows: Vec<Vec<f64>>,
    group: Vec<usize>,
}

impl GroupedPredictor {
    pub fn from_matrix(p: &Matrix) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut group = Vec::with_capacity(p.rows());
        for i in 0..p.rows() {
            match rows.iter().position(|r| r.as_slice() == p.row(i)) {
                Some(g) => group.push(g),
                None => {
                    rows.push(p.row(i).to_vec());
                    group.push(rows.len() - 1);
                }
            }
        }
        GroupedPredictor { rows, group }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Returns `P'π` and the number of multiplications used.
    pub fn predict(&self, pi: &[f64]) -> (Vec<f64>, usize) {
        let mut w = vec![0.0; self.rows.len()];
        for (i, &g) in self.group.iter().enumerate() {
            w[g] += pi[i];
        }
        let x = pi.len();
        let mut out = vec![0.0; x];
        for (g, row) in self.rows.iter().enumerate() {
            for j in 0..x {
                out[j] += w[g] * row[j];
            }
        }
        (out, self.rows.len() * x)
    }
}

fn bayes(pred: &[f64], b: &Matrix, y: usize) -> Result<Vec<f64>> {
    let un: Vec<f64> = pred.iter().enumerate().map(|(j, v)| v * b[(j, y)]).collect();
    let s: f64 = un.iter().sum();
    if !(s > ZERO_LIKELIHOOD) {
        return Err(Error::ZeroLikelihood(s));
    }
    Ok(un.into_iter().map(|v| v / s).collect())
}

fn mean_level(pi: &[f64]) -> f64 {
    pi.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum()
}

fn map_index(pi: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..pi.len() {
        if pi[i] > pi[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichStep {
    pub lower: Vec<f64>,
    pub exact: Vec<f64>,
    pub upper: Vec<f64>,
    pub means: [f64; 3],
    /// 0-based MAP states.
    pub maps: [usize; 3],
}

#[derive(Debug, Clone)]
pub struct SandwichRun {
    pub steps: Vec<SandwichStep>,
    pub mean_violations: usize,
    pub map_violations: usize,
    /// Multiplications spent in the predictors (lower, exact, upper).
    pub multiplies: [usize; 3],
}

impl SandwichRun {
    /// CSV `k,mean_lower,mean,mean_upper,map_lower,map,map_upper` (1-based MAPs).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,mean_lower,mean,mean_upper,map_lower,map,map_upper\n");
        for (k, st) in self.steps.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                k,
                crate::fmt12(st.means[0]),
                crate::fmt12(st.means[1]),
                crate::fmt12(st.means[2]),
                st.maps[0] + 1,
                st.maps[1] + 1,
                st.maps[2] + 1
            ));
        }
        s
    }
}

const MEAN_TOL: f64 = 1e-9;

/// Runs the three filters on a shared observation sequence (0-based) and
/// checks `π̲_k ≤r π_k ≤r π̄_k` at every step.
pub fn sandwich_filter(
    p_lower: &Matrix,
    p: &Matrix,
    p_upper: &Matrix,
    b: &Matrix,
    observations: &[usize],
    pi0: &[f64],
) -> Result<SandwichRun> {
    let preds = [
        GroupedPredictor::from_matrix(p_lower),
        GroupedPredictor::from_matrix(p),
        GroupedPredictor::from_matrix(p_upper),
    ];
    let mut beliefs = [pi0.to_vec(), pi0.to_vec(), pi0.to_vec()];
    let mut run = SandwichRun { steps: Vec::with_capacity(observations.len() + 1), mean_violations: 0, map_violations: 0, multiplies: [0; 3] };
    let record = |run: &mut SandwichRun, bl: &[Vec<f64>; 3]| {
        let means = [mean_level(&bl[0]), mean_level(&bl[1]), mean_level(&bl[2])];
        let maps = [map_index(&bl[0]), map_index(&bl[1]), map_index(&bl[2])];
        if means[0] > means[1] + MEAN_TOL || means[1] > means[2] + MEAN_TOL {
            run.mean_violations += 1;
        }
        if maps[0] > maps[1] || maps[1] > maps[2] {
            run.map_violations += 1;
        }
        run.steps.push(SandwichStep { lower: bl[0].clone(), exact: bl[1].clone(), upper: bl[2].clone(), means, maps });
    };
    record(&mut run, &beliefs);
    for (k, &y) in observations.iter().enumerate() {
        for f in 0..3 {
            let (pred, n) = preds[f].predict(&beliefs[f]);
            run.multiplies[f] += n;
            beliefs[f] = bayes(&pred, b, y)?;
        }
        let lo = mlr_compare(&beliefs[0], &beliefs[1])?;
        let hi = mlr_compare(&beliefs[1], &beliefs[2])?;
        if !lo.le() || !hi.le() {
            return Err(Error::OrderingViolation(k + 1));
        }
        record(&mut run, &beliefs);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::{copositive_order_transitions, CopositiveMethod};

    fn p1() -> Matrix {
        Matrix::new(&[[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.1, 0.3, 0.6]])
    }

    #[test]
    fn rank1_rows() {
        let (lo, hi) = rank1_bounds(&p1()).unwrap();
        for i in 0..3 {
            assert_eq!(lo.row(i), &[0.6, 0.3, 0.1]);
            assert_eq!(hi.row(i), &[0.1, 0.3, 0.6]);
        }
        let m = CopositiveMethod::ElementwiseSufficient;
        assert!(copositive_order_transitions(&lo, &p1(), m).unwrap().is_holds());
        assert!(copositive_order_transitions(&p1(), &hi, m).unwrap().is_holds());
        let perm = Matrix::new(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(rank1_bounds(&perm), Err(Error::NotTP2 { .. })));
    }

    #[test]
    fn lp_bounds_limits() {
        let (lo, hi) = lp_bounds(&p1(), 2.0).unwrap();
        assert!(lo.is_stochastic() && hi.is_stochastic());
        assert!(matches!(lp_bounds(&p1(), 0.0), Err(Error::LpInfeasible(_))));
        let same = Matrix::repeat_row(&[0.2, 0.3, 0.5], 3);
        let (lo, hi) = lp_bounds(&same, 0.0).unwrap();
        assert!(lo.max_abs_diff(&same) < 1e-9 && hi.max_abs_diff(&same) < 1e-9);
    }

    #[test]
    fn identical_bounds_identical_paths() {
        let obs = [0, 2, 1, 1, 0, 2];
        let run = sandwich_filter(&p1(), &p1(), &p1(), &p1(), &obs, &[1.0 / 3.0; 3]).unwrap();
        for st in &run.steps {
            assert_eq!(st.lower, st.exact);
            assert_eq!(st.upper, st.exact);
        }
    }

    #[test]
    fn rank1_predictor_is_cheap() {
        let (lo, _) = rank1_bounds(&p1()).unwrap();
        let g = GroupedPredictor::from_matrix(&lo);
        assert_eq!(g.rank(), 1);
        assert_eq!(g.predict(&[0.2, 0.3, 0.5]).1, 3);
        assert_eq!(GroupedPredictor::from_matrix(&p1()).predict(&[0.2, 0.3, 0.5]).1, 9);
    }
}
