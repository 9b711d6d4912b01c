use crate::error::{Error, Result};
use crate::lp::{Lp, LpOutcome, Relation, LP_TOL};
use crate::model::dot;
use serde::Serialize;
use std::cmp::Ordering;

/// Entries closer than this are treated as the same vector.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaVector {
    pub gamma: Vec<f64>,
    /// 0-based action tag.
    pub action: usize,
}

/// Finite set of tagged hyperplanes; its lower envelope is a concave value function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorSet {
    pub vectors: Vec<AlphaVector>,
    pub stage: usize,
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Canonical order: action tag, then lexicographic.
fn canon(a: &AlphaVector, b: &AlphaVector) -> Ordering {
    a.action.cmp(&b.action).then_with(|| lex(&a.gamma, &b.gamma))
}

fn near(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DEDUP_TOL)
}

impl VectorSet {
    pub fn new(vectors: Vec<AlphaVector>, stage: usize) -> Self {
        let mut s = VectorSet { vectors, stage };
        s.dedup();
        s
    }

    pub fn singleton(gamma: Vec<f64>, action: usize, stage: usize) -> Self {
        VectorSet { vectors: vec![AlphaVector { gamma, action }], stage }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.gamma.len())
    }

    /// Drops near-duplicates (keeping the lowest action) and sorts canonically.
    pub fn dedup(&mut self) {
        self.vectors.sort_by(|a, b| lex(&a.gamma, &b.gamma).then(a.action.cmp(&b.action)));
        let mut kept: Vec<AlphaVector> = Vec::with_capacity(self.vectors.len());
        for v in self.vectors.drain(..) {
            if kept.last().is_some_and(|k| near(&k.gamma, &v.gamma)) {
                continue;
            }
            kept.push(v);
        }
        kept.sort_by(canon);
        self.vectors = kept;
    }

    /// `min_γ γ'π` with the index and action of the minimizer.
    /// Ties go to the lowest action, then the lexicographically smallest vector.
    pub fn evaluate(&self, pi: &[f64]) -> (f64, usize, usize) {
        let mut best: Option<(f64, usize)> = None;
        for (k, v) in self.vectors.iter().enumerate() {
            let val = dot(&v.gamma, pi);
            best = match best {
                None => Some((val, k)),
                Some((bv, bk)) => {
                    let b = &self.vectors[bk];
                    let better = val < bv - DEDUP_TOL
                        || ((val - bv).abs() <= DEDUP_TOL && canon(v, b) == Ordering::Less);
                    if better {
                        Some((val, k))
                    } else {
                        Some((bv, bk))
                    }
                }
            };
        }
        let (val, k) = best.expect("empty vector set");
        (val, k, self.vectors[k].action)
    }

    pub fn value(&self, pi: &[f64]) -> f64 {
        self.evaluate(pi).0
    }

    pub fn action(&self, pi: &[f64]) -> usize {
        self.evaluate(pi).2
    }

    pub fn union(mut self, other: VectorSet) -> VectorSet {
        self.vectors.extend(other.vectors);
        self.dedup();
        self
    }
}

/// All pairwise sums; the action tag of the left operand is kept.
pub fn cross_sum(a: &VectorSet, b: &VectorSet) -> VectorSet {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a.vectors {
        for y in &b.vectors {
            out.push(AlphaVector {
                gamma: x.gamma.iter().zip(&y.gamma).map(|(p, q)| p + q).collect(),
                action: x.action,
            });
        }
    }
    VectorSet::new(out, a.stage)
}

/// Pointwise domination: `a ≥ b` entrywise (so `a` is never needed when `b` exists).
fn dominated(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x >= *y - DEDUP_TOL)
}

/// Largest margin by which `gamma` beats every vector in `others` at some belief.
pub fn best_margin(gamma: &[f64], others: &[&[f64]]) -> Result<(f64, Vec<f64>)> {
    let x = gamma.len();
    let mut obj = vec![0.0; x + 1];
    obj[x] = 1.0;
    let mut lp = Lp::maximize(obj);
    lp.set_free(x);
    let mut row = vec![1.0; x + 1];
    row[x] = 0.0;
    lp.add(row, Relation::Eq, 1.0);
    for o in others {
        let mut r: Vec<f64> = gamma.iter().zip(o.iter()).map(|(g, h)| g - h).collect();
        r.push(1.0);
        lp.add(r, Relation::Le, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal { x: sol, value } => Ok((value, sol[..x].to_vec())),
        LpOutcome::Unbounded => Ok((f64::INFINITY, vec![1.0 / x as f64; x])),
        LpOutcome::Infeasible => Err(Error::LpNumericFailure("dominance LP infeasible".into())),
    }
}

/// Index of the minimizer at `pi` among `cands`, canonical tie-break.
fn argmin_at(cands: &[AlphaVector], pi: &[f64]) -> usize {
    let mut best = 0;
    let mut bv = dot(&cands[0].gamma, pi);
    for (k, c) in cands.iter().enumerate().skip(1) {
        let v = dot(&c.gamma, pi);
        if v < bv - DEDUP_TOL || ((v - bv).abs() <= DEDUP_TOL && canon(c, &cands[best]) == Ordering::Less) {
            best = k;
            bv = v;
        }
    }
    best
}

/// Removes every vector that is nowhere strictly below the others.
///
/// Survivors are collected with witness beliefs: each LP tests one candidate
/// against the vectors already known to be on the envelope.
pub fn lp_prune(set: &VectorSet) -> Result<VectorSet> {
    let mut s = set.clone();
    s.dedup();
    if s.len() <= 1 {
        return Ok(s);
    }
    let n = s.len();
    let mut alive = vec![true; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && alive[j] && dominated(&s.vectors[i].gamma, &s.vectors[j].gamma) {
                alive[i] = false;
                break;
            }
        }
    }
    let mut frontier: Vec<AlphaVector> =
        s.vectors.into_iter().zip(alive).filter(|(_, a)| *a).map(|(v, _)| v).collect();
    let x = set.dim();
    let mut kept: Vec<AlphaVector> = Vec::new();
    for i in 0..x {
        if frontier.is_empty() {
            break;
        }
        let e = crate::model::unit(x, i);
        let k = argmin_at(&frontier, &e);
        if kept.iter().all(|w| dot(&w.gamma, &e) > dot(&frontier[k].gamma, &e) + DEDUP_TOL) || kept.is_empty() {
            kept.push(frontier.swap_remove(k));
        }
    }
    while let Some(phi) = frontier.last().cloned() {
        let others: Vec<&[f64]> = kept.iter().map(|w| w.gamma.as_slice()).collect();
        let (margin, witness) = best_margin(&phi.gamma, &others)?;
        if margin <= LP_TOL {
            frontier.pop();
            continue;
        }
        let k = argmin_at(&frontier, &witness);
        kept.push(frontier.swap_remove(k));
    }
    kept.sort_by(canon);
    Ok(VectorSet { vectors: kept, stage: set.stage })
}

/// `sup_π (V_a(π) − V_b(π))`, computed by one LP per vector of `b`.
pub fn sup_difference(a: &VectorSet, b: &VectorSet) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    let avec: Vec<&[f64]> = a.vectors.iter().map(|v| v.gamma.as_slice()).collect();
    for beta in &b.vectors {
        // max t s.t. t ≤ (α − β)'π ∀α, π on the simplex.
        let x = beta.gamma.len();
        let mut obj = vec![0.0; x + 1];
        obj[x] = 1.0;
        let mut lp = Lp::maximize(obj);
        lp.set_free(x);
        let mut row = vec![1.0; x + 1];
        row[x] = 0.0;
        lp.add(row, Relation::Eq, 1.0);
        for al in &avec {
            let mut r: Vec<f64> = al.iter().zip(&beta.gamma).map(|(p, q)| q - p).collect();
            r.push(1.0);
            lp.add(r, Relation::Le, 0.0);
        }
        match lp.solve()? {
            LpOutcome::Optimal { value, .. } => best = best.max(value),
            _ => return Err(Error::LpNumericFailure("sup-difference LP".into())),
        }
    }
    Ok(best)
}

/// `sup_π |V_a(π) − V_b(π)|`.
pub fn sup_abs_difference(a: &VectorSet, b: &VectorSet) -> Result<f64> {
    Ok(sup_difference(a, b)?.max(sup_difference(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[(&[f64], usize)]) -> VectorSet {
        VectorSet::new(v.iter().map(|(g, a)| AlphaVector { gamma: g.to_vec(), action: *a }).collect(), 0)
    }

    #[test]
    fn evaluate_min_and_ties() {
        let s = set(&[(&[1.0, 0.0], 1), (&[0.0, 1.0], 0)]);
        let (v, _, a) = s.evaluate(&[0.5, 0.5]);
        assert_eq!(v, 0.5);
        assert_eq!(a, 0);
        assert_eq!(set(&[(&[2.0, 3.0], 0)]).value(&[0.4, 0.6]), 0.4 * 2.0 + 0.6 * 3.0);
    }

    #[test]
    fn cross_sum_counts() {
        let a = set(&[(&[1.0, 0.0], 0), (&[0.0, 1.0], 0), (&[0.5, 0.5], 0)]);
        let b = set(&[(&[10.0, 0.0], 0), (&[0.0, 20.0], 0)]);
        let c = cross_sum(&a, &b);
        assert_eq!(c.len(), 6);
        assert!(c.vectors.iter().any(|v| v.gamma == vec![10.5, 0.5]));
    }

    #[test]
    fn prune_drops_dominated_and_inactive() {
        let s = set(&[(&[1.0, 1.0], 0), (&[2.0, 2.0], 0)]);
        assert_eq!(lp_prune(&s).unwrap().len(), 1);
        // Four lines forming an envelope plus one above it everywhere.
        let s = set(&[
            (&[0.0, 4.0], 0),
            (&[1.0, 2.0], 0),
            (&[2.0, 1.0], 0),
            (&[4.0, 0.0], 0),
            (&[1.6, 1.6], 0),
        ]);
        let p = lp_prune(&s).unwrap();
        assert_eq!(p.len(), 4);
        assert!(!p.vectors.iter().any(|v| v.gamma == vec![1.6, 1.6]));
    }

    #[test]
    fn sup_difference_exact() {
        let a = set(&[(&[1.0, 0.0], 0), (&[0.0, 1.0], 0)]);
        let b = set(&[(&[0.0, 0.0], 0)]);
        assert!((sup_abs_difference(&a, &b).unwrap() - 0.5).abs() < 1e-9);
    }
}
