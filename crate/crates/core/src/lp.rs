//! Dense two-phase simplex with Bland's rule, sized for the small programs used
//! by pruning, myopic bounds and Blackwell factorization.

use crate::error::{Error, Result};

pub const LP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, *value)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    rel: Relation,
    rhs: f64,
}

/// `min c'x` subject to linear rows; variables are nonnegative unless marked free.
#[derive(Debug, Clone)]
pub struct Lp {
    n: usize,
    objective: Vec<f64>,
    sign: f64,
    rows: Vec<Row>,
    free: Vec<bool>,
}

impl Lp {
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Lp { n, objective, sign: 1.0, rows: Vec::new(), free: vec![false; n] }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Lp {
            n,
            objective: objective.iter().map(|v| -v).collect(),
            sign: -1.0,
            rows: Vec::new(),
            free: vec![false; n],
        }
    }

    /// Feasibility problem in `n` variables.
    pub fn feasibility(n: usize) -> Self {
        Lp::minimize(vec![0.0; n])
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.free[j] = true;
        self
    }

    pub fn set_all_free(&mut self) -> &mut Self {
        self.free.iter_mut().for_each(|f| *f = true);
        self
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n, "constraint width");
        self.rows.push(Row { coeffs, rel, rhs });
        self
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        // Column layout: original split variables, then slacks, then artificials.
        let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.n);
        let mut ncols = 0;
        for j in 0..self.n {
            if self.free[j] {
                col_of.push((ncols, Some(ncols + 1)));
                ncols += 2;
            } else {
                col_of.push((ncols, None));
                ncols += 1;
            }
        }
        let nstruct = ncols;
        let m = self.rows.len();
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
        for r in &self.rows {
            let mut a = vec![0.0; nstruct];
            for j in 0..self.n {
                let (p, q) = col_of[j];
                a[p] = r.coeffs[j];
                if let Some(q) = q {
                    a[q] = -r.coeffs[j];
                }
            }
            let (mut rel, mut rhs) = (r.rel, r.rhs);
            if rhs < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rows.push((a, rel, rhs));
        }
        let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let nart = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let total = nstruct + nslack + nart;
        let width = total + 1;
        let mut t = vec![0.0; m * width];
        let mut basis = vec![0usize; m];
        let (mut s, mut a) = (nstruct, nstruct + nslack);
        for (i, (coef, rel, rhs)) in rows.iter().enumerate() {
            let row = &mut t[i * width..(i + 1) * width];
            row[..nstruct].copy_from_slice(coef);
            row[total] = *rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        let art_start = nstruct + nslack;
        let mut tab = Tableau { t, width, m, basis, active: vec![true; m] };

        if nart > 0 {
            let mut c1 = vec![0.0; total];
            c1[art_start..total].iter_mut().for_each(|v| *v = 1.0);
            match tab.run(&c1, total)? {
                Phase::Optimal => {}
                Phase::Unbounded => return Err(Error::LpNumericFailure("phase 1 unbounded".into())),
            }
            let infeas: f64 = (0..m)
                .filter(|&i| tab.active[i] && tab.basis[i] >= art_start)
                .map(|i| tab.rhs(i))
                .sum();
            if infeas > LP_TOL * (1.0 + self.rhs_scale()) {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining artificials out; rows with no usable pivot are redundant.
            for i in 0..m {
                if !tab.active[i] || tab.basis[i] < art_start {
                    continue;
                }
                match (0..art_start).find(|&j| tab.at(i, j).abs() > LP_TOL) {
                    Some(j) => tab.pivot(i, j),
                    None => tab.active[i] = false,
                }
            }
        }

        let mut c2 = vec![0.0; total];
        for j in 0..self.n {
            let (p, q) = col_of[j];
            c2[p] = self.objective[j];
            if let Some(q) = q {
                c2[q] = -self.objective[j];
            }
        }
        match tab.run(&c2, art_start)? {
            Phase::Unbounded => return Ok(LpOutcome::Unbounded),
            Phase::Optimal => {}
        }
        let mut xs = vec![0.0; total];
        for i in 0..m {
            if tab.active[i] {
                xs[tab.basis[i]] = tab.rhs(i);
            }
        }
        let x: Vec<f64> = (0..self.n)
            .map(|j| {
                let (p, q) = col_of[j];
                xs[p] - q.map_or(0.0, |q| xs[q])
            })
            .collect();
        let value: f64 = self.sign * self.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
        Ok(LpOutcome::Optimal { x, value })
    }

    fn rhs_scale(&self) -> f64 {
        self.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max)
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau {
    t: Vec<f64>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
    active: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let pv = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= pv;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `c'x` over columns `< ncols` using Bland's rule.
    fn run(&mut self, c: &[f64], ncols: usize) -> Result<Phase> {
        let limit = 50_000 + 200 * (self.m + ncols);
        for _ in 0..limit {
            // Reduced costs d_j = c_j - c_B' B^{-1} A_j.
            let mut enter = None;
            for j in 0..ncols {
                if self.basis.iter().zip(&self.active).any(|(&b, &a)| a && b == j) {
                    continue;
                }
                let mut d = c[j];
                for i in 0..self.m {
                    if self.active[i] {
                        d -= c[self.basis[i]] * self.at(i, j);
                    }
                }
                if d < -LP_TOL {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else { return Ok(Phase::Optimal) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if !self.active[i] {
                    continue;
                }
                let a = self.at(i, j);
                if a > LP_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - LP_TOL
                                || ((ratio - best).abs() <= LP_TOL && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Ok(Phase::Unbounded) };
            self.pivot(r, j);
        }
        Err(Error::LpNumericFailure("simplex iteration limit".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = Lp::maximize(vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0)
            .add(vec![0.0, 2.0], Relation::Le, 12.0)
            .add(vec![3.0, 2.0], Relation::Le, 18.0);
        let (x, v) = lp.solve().unwrap().optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((v - 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = Lp::feasibility(1);
        lp.add(vec![1.0], Relation::Ge, 2.0).add(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = Lp::maximize(vec![1.0]);
        lp.add(vec![1.0], Relation::Ge, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables_and_redundant_equalities() {
        // min x s.t. x + y = 1, 2x + 2y = 2, y <= 3, x free -> x = -2
        let mut lp = Lp::minimize(vec![1.0, 0.0]);
        lp.set_free(0);
        lp.add(vec![1.0, 1.0], Relation::Eq, 1.0)
            .add(vec![2.0, 2.0], Relation::Eq, 2.0)
            .add(vec![0.0, 1.0], Relation::Le, 3.0);
        let (x, v) = lp.solve().unwrap().optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((v + 2.0).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn negative_rhs_rows() {
        // min x s.t. -x <= -3 -> x = 3
        let mut lp = Lp::minimize(vec![1.0]);
        lp.add(vec![-1.0], Relation::Le, -3.0);
        assert!((lp.solve().unwrap().optimal().unwrap().1 - 3.0).abs() < 1e-9);
    }
}
