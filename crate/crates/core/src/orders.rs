//! Stochastic orders and matrix-structure tests: MLR, first-order dominance,
//! TP2, tail-sum supermodularity, copositive orderings, (F4) and Blackwell
//! factorization. Witness indices are 1-based.

use crate::error::{Error, Result};
use crate::lp::{Lp, LpOutcome, Relation};
use crate::model::{dot, Matrix, Mdp};
use serde::Serialize;

/// Absolute tolerance on products of probabilities.
pub const ORDER_TOL: f64 = 1e-12;
/// Residual allowed when checking a Blackwell factorization.
pub const BLACKWELL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    GE,
    LE,
    EQ,
    Incomparable,
}

impl Comparison {
    /// True when the first argument dominates (GE or EQ).
    pub fn ge(self) -> bool {
        matches!(self, Comparison::GE | Comparison::EQ)
    }

    pub fn le(self) -> bool {
        matches!(self, Comparison::LE | Comparison::EQ)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Holds,
    Fails,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Indices { indices: Vec<usize> },
    Minor { i1: usize, i2: usize, j1: usize, j2: usize, value: f64 },
    Belief { belief: Vec<f64>, value: f64 },
    Beliefs { beliefs: Vec<Vec<f64>>, value: f64 },
    Note { note: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl OrderVerdict {
    pub fn holds() -> Self {
        OrderVerdict { status: Status::Holds, witness: None }
    }

    pub fn undetermined() -> Self {
        OrderVerdict { status: Status::Undetermined, witness: None }
    }

    pub fn fails(w: Witness) -> Self {
        OrderVerdict { status: Status::Fails, witness: Some(w) }
    }

    pub fn fails_at(indices: Vec<usize>) -> Self {
        Self::fails(Witness::Indices { indices })
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }

    /// Holds if both hold, Fails if either fails (first witness kept).
    pub fn and(self, other: OrderVerdict) -> OrderVerdict {
        match (self.status, other.status) {
            (Status::Fails, _) => self,
            (_, Status::Fails) => other,
            (Status::Undetermined, _) => self,
            (_, Status::Undetermined) => other,
            _ => self,
        }
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("lengths {} and {}", a.len(), b.len())));
    }
    Ok(())
}

fn combine(ge: bool, le: bool) -> Comparison {
    match (ge, le) {
        (true, true) => Comparison::EQ,
        (true, false) => Comparison::GE,
        (false, true) => Comparison::LE,
        (false, false) => Comparison::Incomparable,
    }
}

/// Likelihood-ratio comparison. GE iff `π1(i)π2(j) ≤ π2(i)π1(j)` for all `i < j`.
pub fn mlr_compare(p1: &[f64], p2: &[f64]) -> Result<Comparison> {
    same_len(p1, p2)?;
    let n = p1.len();
    let (mut ge, mut le) = (true, true);
    for i in 0..n {
        for j in i + 1..n {
            let d = p1[i] * p2[j] - p2[i] * p1[j];
            if d > ORDER_TOL {
                ge = false;
            }
            if d < -ORDER_TOL {
                le = false;
            }
        }
        if !ge && !le {
            break;
        }
    }
    Ok(combine(ge, le))
}

/// First-order dominance via tail sums.
pub fn fosd_compare(p1: &[f64], p2: &[f64]) -> Result<Comparison> {
    same_len(p1, p2)?;
    let (mut ge, mut le) = (true, true);
    let (mut t1, mut t2) = (0.0, 0.0);
    for i in (1..p1.len()).rev() {
        t1 += p1[i];
        t2 += p2[i];
        if t1 < t2 - ORDER_TOL {
            ge = false;
        }
        if t1 > t2 + ORDER_TOL {
            le = false;
        }
    }
    Ok(combine(ge, le))
}

/// All 2×2 minors nonnegative within tolerance.
pub fn is_tp2(m: &Matrix) -> OrderVerdict {
    for i1 in 0..m.rows() {
        for i2 in i1 + 1..m.rows() {
            for j1 in 0..m.cols() {
                for j2 in j1 + 1..m.cols() {
                    let minor = m[(i1, j1)] * m[(i2, j2)] - m[(i1, j2)] * m[(i2, j1)];
                    if minor < -ORDER_TOL {
                        return OrderVerdict::fails(Witness::Minor {
                            i1: i1 + 1,
                            i2: i2 + 1,
                            j1: j1 + 1,
                            j2: j2 + 1,
                            value: minor,
                        });
                    }
                }
            }
        }
    }
    OrderVerdict::holds()
}

/// `Σ_{j≥l}(P_ij(u+1) − P_ij(u))` increasing in `i` for every `l`.
/// Fails carries `[l, i, i+1]`.
pub fn tail_sum_supermodular(pu: &Matrix, pu1: &Matrix) -> OrderVerdict {
    let x = pu.rows();
    let n = pu.cols();
    for l in 1..n {
        let tail = |i: usize| -> f64 { (l..n).map(|j| pu1[(i, j)] - pu[(i, j)]).sum() };
        for i in 0..x.saturating_sub(1) {
            if tail(i) > tail(i + 1) + ORDER_TOL {
                return OrderVerdict::fails_at(vec![l + 1, i + 1, i + 2]);
            }
        }
    }
    OrderVerdict::holds()
}

/// Rows are first-order increasing: `P_i ≤s P_{i+1}`. Fails carries `[i, i+1]`.
pub fn rows_fosd_increasing(p: &Matrix) -> OrderVerdict {
    for i in 0..p.rows().saturating_sub(1) {
        if !fosd_compare(p.row(i), p.row(i + 1)).expect("same width").le() {
            return OrderVerdict::fails_at(vec![i + 1, i + 2]);
        }
    }
    OrderVerdict::holds()
}

/// Rows MLR-increasing, equivalent to TP2 for stochastic matrices.
pub fn rows_mlr_increasing(p: &Matrix) -> OrderVerdict {
    for i in 0..p.rows().saturating_sub(1) {
        if !mlr_compare(p.row(i), p.row(i + 1)).expect("same width").le() {
            return OrderVerdict::fails_at(vec![i + 1, i + 2]);
        }
    }
    OrderVerdict::holds()
}

/// How a copositivity question is answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopositiveMethod {
    /// Holds when every symmetrized entry is nonnegative, otherwise Undetermined.
    ElementwiseSufficient,
    /// Evaluates the form on all compositions of `resolution` plus the vertices.
    GridFalsify(usize),
    /// Exact sign analysis of the scalar quadratic; X = 2 only.
    Exact2State,
}

const GRID_VIOLATION: f64 = 1e-9;

/// All compositions of `n` into `parts` nonnegative integers, scaled to the simplex.
pub fn simplex_grid(parts: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<f64>>) {
        if k + 1 == cur.len() {
            cur[k] = left;
            out.push(cur.iter().map(|&c| c as f64 / n as f64).collect());
            return;
        }
        for v in 0..=left {
            cur[k] = v;
            rec(k + 1, left - v, cur, n, out);
        }
    }
    if parts == 0 || n == 0 {
        return out;
    }
    rec(0, n, &mut cur, n, &mut out);
    out
}

fn quad_form(g: &Matrix, pi: &[f64]) -> f64 {
    dot(pi, &g.mul_vec(pi))
}

fn symmetrize(g: &Matrix) -> Matrix {
    let n = g.rows();
    let mut s = Matrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            s[(m, k)] = 0.5 * (g[(m, k)] + g[(k, m)]);
        }
    }
    s
}

/// Tests `π'Γπ ≥ 0` on the simplex for every matrix in `gammas`.
fn copositive_all(gammas: &[Matrix], method: CopositiveMethod) -> Result<OrderVerdict> {
    let x = gammas.first().map_or(0, |g| g.rows());
    match method {
        CopositiveMethod::ElementwiseSufficient => {
            let ok = gammas.iter().all(|g| symmetrize(g).as_slice().iter().all(|v| *v >= -ORDER_TOL));
            Ok(if ok { OrderVerdict::holds() } else { OrderVerdict::undetermined() })
        }
        CopositiveMethod::GridFalsify(res) => {
            let grid = simplex_grid(x, res.max(1));
            for g in gammas {
                for pi in &grid {
                    let v = quad_form(g, pi);
                    if v < -GRID_VIOLATION {
                        return Ok(OrderVerdict::fails(Witness::Belief { belief: pi.clone(), value: v }));
                    }
                }
            }
            Ok(OrderVerdict::undetermined())
        }
        CopositiveMethod::Exact2State => {
            if x != 2 {
                return Err(Error::UnsupportedExact);
            }
            for g in gammas {
                let s = symmetrize(g);
                let (g11, g12, g22) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
                let a = g11 - 2.0 * g12 + g22;
                let q = |t: f64| g11 + 2.0 * (g12 - g11) * t + a * t * t;
                let mut cands = vec![0.0, 1.0];
                if a > 0.0 {
                    let t = (g11 - g12) / a;
                    if (0.0..=1.0).contains(&t) {
                        cands.push(t);
                    }
                }
                for t in cands {
                    let v = q(t);
                    if v < -ORDER_TOL {
                        return Ok(OrderVerdict::fails(Witness::Belief { belief: vec![1.0 - t, t], value: v }));
                    }
                }
            }
            Ok(OrderVerdict::holds())
        }
    }
}

/// `Γ^{j,u,y}` matrices for the joint (transition, observation) copositive order, before symmetrization.
pub fn copositive_full_matrices(pu: &Matrix, bu: &Matrix, pu1: &Matrix, bu1: &Matrix) -> Result<Vec<Matrix>> {
    let x = pu.rows();
    if [pu.cols(), pu1.rows(), pu1.cols(), bu.rows(), bu1.rows()].iter().any(|&d| d != x) || bu.cols() != bu1.cols() {
        return Err(Error::DimensionMismatch("copositive order operands".into()));
    }
    let mut out = Vec::new();
    for j in 0..x.saturating_sub(1) {
        for y in 0..bu.cols() {
            let mut g = Matrix::zeros(x, x);
            for m in 0..x {
                for n in 0..x {
                    g[(m, n)] = bu[(j, y)] * bu1[(j + 1, y)] * pu[(m, j)] * pu1[(n, j + 1)]
                        - bu[(j + 1, y)] * bu1[(j, y)] * pu[(m, j + 1)] * pu1[(n, j)];
                }
            }
            out.push(g);
        }
    }
    Ok(out)
}

/// `Γ^{j}` matrices for the transition-only copositive order.
pub fn copositive_transition_matrices(p: &Matrix, q: &Matrix) -> Result<Vec<Matrix>> {
    let x = p.rows();
    if p.cols() != x || q.rows() != x || q.cols() != x {
        return Err(Error::DimensionMismatch("copositive order operands".into()));
    }
    let mut out = Vec::new();
    for j in 0..x.saturating_sub(1) {
        let mut g = Matrix::zeros(x, x);
        for m in 0..x {
            for n in 0..x {
                g[(m, n)] = p[(m, j)] * q[(n, j + 1)] - p[(m, j + 1)] * q[(n, j)];
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Checks `(P(u),B(u)) ⪯ (P(u+1),B(u+1))`.
pub fn copositive_order_full(pu: &Matrix, bu: &Matrix, pu1: &Matrix, bu1: &Matrix, method: CopositiveMethod) -> Result<OrderVerdict> {
    copositive_all(&copositive_full_matrices(pu, bu, pu1, bu1)?, method)
}

/// Checks `P ⪯ Q`: filtering with `Q` MLR-dominates filtering with `P`.
pub fn copositive_order_transitions(p: &Matrix, q: &Matrix, method: CopositiveMethod) -> Result<OrderVerdict> {
    copositive_all(&copositive_transition_matrices(p, q)?, method)
}

/// `Σ_{y≤ȳ} Σ_j [P_ij(u)B_jy(u) − P_ij(u+1)B_jy(u+1)] ≤ 0` for all `(i, ȳ)`.
/// Fails carries `[i, ȳ]`.
pub fn check_f4(pu: &Matrix, bu: &Matrix, pu1: &Matrix, bu1: &Matrix) -> OrderVerdict {
    let a = pu.mul(bu);
    let b = pu1.mul(bu1);
    for i in 0..a.rows() {
        let mut acc = 0.0;
        for y in 0..a.cols() {
            acc += a[(i, y)] - b[(i, y)];
            if acc > ORDER_TOL {
                return OrderVerdict::fails_at(vec![i + 1, y + 1]);
            }
        }
    }
    OrderVerdict::holds()
}

/// Finds a row-stochastic `R` (Y2×Y1) with `B1 = B2 R`. `None` when no such `R` exists.
pub fn blackwell_factorize(b1: &Matrix, b2: &Matrix) -> Result<Option<Matrix>> {
    let x = b1.rows();
    if b2.rows() != x {
        return Err(Error::DimensionMismatch("Blackwell operands need equal state counts".into()));
    }
    let (y1, y2) = (b1.cols(), b2.cols());
    let nv = y1 * y2;
    let var = |a: usize, b: usize| a * y1 + b;
    let mut lp = Lp::feasibility(nv);
    for i in 0..x {
        for b in 0..y1 {
            let mut row = vec![0.0; nv];
            for a in 0..y2 {
                row[var(a, b)] = b2[(i, a)];
            }
            lp.add(row, Relation::Eq, b1[(i, b)]);
        }
    }
    for a in 0..y2 {
        let mut row = vec![0.0; nv];
        for b in 0..y1 {
            row[var(a, b)] = 1.0;
        }
        lp.add(row, Relation::Eq, 1.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal { x: sol, .. } => {
            let mut r = Matrix::zeros(y2, y1);
            for a in 0..y2 {
                for b in 0..y1 {
                    r[(a, b)] = sol[var(a, b)].max(0.0);
                }
            }
            r.normalize_rows();
            let resid = b2.mul(&r).max_abs_diff(b1);
            if resid > BLACKWELL_TOL {
                return Err(Error::LpNumericFailure(format!("factorization residual {resid:e}")));
            }
            Ok(Some(r))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::LpNumericFailure("feasibility LP unbounded".into())),
    }
}

/// Orientation of the monotone-MDP conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneVariant {
    /// Costs decreasing in the state; the optimal policy is increasing.
    Standard,
    /// The state order reversed: costs increasing, policy decreasing.
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdpReport {
    #[serde(rename = "A1")]
    pub a1: OrderVerdict,
    #[serde(rename = "A2")]
    pub a2: OrderVerdict,
    #[serde(rename = "A3")]
    pub a3: OrderVerdict,
    #[serde(rename = "A4")]
    pub a4: OrderVerdict,
}

impl MdpReport {
    pub fn all_hold(&self) -> bool {
        [&self.a1, &self.a2, &self.a3, &self.a4].iter().all(|v| v.is_holds())
    }
}

fn reverse_states(mdp: &Mdp) -> Mdp {
    let x = mdp.num_states();
    let r = |i: usize| x - 1 - i;
    let p = mdp
        .p
        .iter()
        .map(|m| {
            let mut q = Matrix::zeros(x, x);
            for i in 0..x {
                for j in 0..x {
                    q[(i, j)] = m[(r(i), r(j))];
                }
            }
            q
        })
        .collect();
    let mut c = Matrix::zeros(x, mdp.num_actions());
    for i in 0..x {
        c.row_mut(i).copy_from_slice(mdp.c.row(r(i)));
    }
    let terminal = (0..x).map(|i| mdp.terminal[r(i)]).collect();
    Mdp { p, c, rho: mdp.rho, terminal }
}

/// Evaluates (A1) costs decreasing, (A2) rows FOSD-increasing, (A3) submodular
/// costs and (A4) tail-sum supermodular transitions.
pub fn mdp_monotone_report(mdp: &Mdp, variant: MonotoneVariant) -> MdpReport {
    let owned;
    let m = match variant {
        MonotoneVariant::Standard => mdp,
        MonotoneVariant::Reversed => {
            owned = reverse_states(mdp);
            &owned
        }
    };
    let x = m.num_states();
    let u = m.num_actions();
    let mut a1 = OrderVerdict::holds();
    'a1: for a in 0..u {
        for i in 0..x - 1 {
            if m.c[(i + 1, a)] > m.c[(i, a)] + ORDER_TOL {
                a1 = OrderVerdict::fails_at(vec![i + 1, a + 1]);
                break 'a1;
            }
        }
    }
    if a1.is_holds() {
        if let Some(i) = (0..x - 1).find(|&i| m.terminal[i + 1] > m.terminal[i] + ORDER_TOL) {
            a1 = OrderVerdict::fails(Witness::Note { note: format!("terminal cost increases at state {}", i + 1) });
        }
    }
    let mut a2 = OrderVerdict::holds();
    for (a, p) in m.p.iter().enumerate() {
        if let Some(Witness::Indices { mut indices }) = rows_fosd_increasing(p).witness {
            indices.push(a + 1);
            a2 = OrderVerdict::fails_at(indices);
            break;
        }
    }
    let mut a3 = OrderVerdict::holds();
    'a3: for a in 0..u.saturating_sub(1) {
        for i in 0..x - 1 {
            let d0 = m.c[(i, a + 1)] - m.c[(i, a)];
            let d1 = m.c[(i + 1, a + 1)] - m.c[(i + 1, a)];
            if d1 > d0 + ORDER_TOL {
                a3 = OrderVerdict::fails_at(vec![i + 1, a + 1]);
                break 'a3;
            }
        }
    }
    let mut a4 = OrderVerdict::holds();
    for a in 0..u.saturating_sub(1) {
        let v = tail_sum_supermodular(&m.p[a], &m.p[a + 1]);
        if v.is_fails() {
            a4 = v;
            break;
        }
    }
    MdpReport { a1, a2, a3, a4 }
}

/// Random TP2 stochastic matrix `M_ij ∝ b_j exp(θ_i t_j)` with sorted `θ`, `t`.
pub fn random_tp2<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let mut theta: Vec<f64> = (0..rows).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut t: Vec<f64> = (0..cols).map(|_| rng.random_range(0.0..1.0)).collect();
    theta.sort_by(f64::total_cmp);
    t.sort_by(f64::total_cmp);
    let b: Vec<f64> = (0..cols).map(|_| rng.random_range(0.2..1.0)).collect();
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = b[j] * (theta[i] * t[j]).exp();
        }
    }
    m.normalize_rows();
    m
}
