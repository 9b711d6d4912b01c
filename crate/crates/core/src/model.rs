//! POMDP and MDP data model, validation, cost reductions and simplex helpers.
//!
//! All indices in the Rust API are 0-based. The JSON schema and every other
//! external interface use 1-based indices; conversion happens at the boundary.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on row sums. Deviations up to this are renormalized silently.
pub const ROW_TOL: f64 = 1e-9;
/// Deviations below this are left untouched so that parse/serialize is exact.
pub const ROW_EXACT: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Matrix { rows, cols, data: vec![v; rows * cols] }
    }

    /// Builds from nested rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.concat() })
    }

    /// Panicking variant for literals in code and tests.
    pub fn new<const C: usize>(rows: &[[f64; C]]) -> Self {
        Matrix { rows: rows.len(), cols: C, data: rows.iter().flatten().copied().collect() }
    }

    /// A matrix whose every row equals `row`.
    pub fn repeat_row(row: &[f64], n: usize) -> Self {
        let mut data = Vec::with_capacity(n * row.len());
        for _ in 0..n {
            data.extend_from_slice(row);
        }
        Matrix { rows: n, cols: row.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `M' v`.
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> Matrix {
        assert_eq!(self.rows, self.cols);
        let mut out = Matrix::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Rescales each row to sum to one (no tolerance checks).
    pub fn normalize_rows(&mut self) {
        for i in 0..self.rows {
            let s: f64 = self.row(i).iter().sum();
            if s > 0.0 {
                self.row_mut(i).iter_mut().for_each(|v| *v /= s);
            }
        }
    }

    /// Checks entries are nonnegative and rows sum to one within [`ROW_TOL`],
    /// renormalizing rows whose deviation lies in (`ROW_EXACT`, `ROW_TOL`].
    /// `action` is 0-based and only used in the error.
    pub fn make_stochastic(&mut self, action: usize) -> Result<()> {
        for i in 0..self.rows {
            if let Some(v) = self.row(i).iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::NegativeEntry(format!(
                    "action {} row {} has entry {}",
                    action + 1,
                    i + 1,
                    v
                )));
            }
            let s: f64 = self.row(i).iter().sum();
            let dev = (s - 1.0).abs();
            if dev > ROW_TOL {
                return Err(Error::NonStochasticRow { action: action + 1, row: i + 1, sum: s });
            }
            if dev > ROW_EXACT {
                self.row_mut(i).iter_mut().for_each(|v| *v /= s);
            }
        }
        Ok(())
    }

    pub fn is_stochastic(&self) -> bool {
        (0..self.rows).all(|i| {
            self.row(i).iter().all(|v| *v >= 0.0) && (self.row(i).iter().sum::<f64>() - 1.0).abs() <= ROW_TOL
        })
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit vector `e_i` (0-based `i`).
pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Checks that `pi` lies on the simplex within [`ROW_TOL`].
pub fn check_belief(pi: &[f64]) -> Result<()> {
    if pi.len() < 2 {
        return Err(Error::DimensionMismatch("belief needs at least 2 entries".into()));
    }
    if pi.iter().any(|v| !(*v >= -ROW_EXACT) || *v > 1.0 + ROW_EXACT) {
        return Err(Error::InvalidProbability(format!("{pi:?}")));
    }
    let s: f64 = pi.iter().sum();
    if (s - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidProbability(format!("belief sums to {s}")));
    }
    Ok(())
}

fn default_absorbing() -> Option<usize> {
    None
}

/// JSON shape of a model. Indices in `absorbing` are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawModel {
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "U")]
    pub u: usize,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Vec<f64>>>,
    pub c: Vec<Vec<f64>>,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<Vec<f64>>,
    #[serde(default = "default_absorbing", skip_serializing_if = "Option::is_none")]
    pub absorbing: Option<usize>,
}

/// Validated POMDP. `c` is X×U (rows are states).
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    pub x: usize,
    pub u: usize,
    pub y: usize,
    pub p: Vec<Matrix>,
    pub b: Vec<Matrix>,
    pub c: Matrix,
    pub rho: f64,
    pub horizon: Option<usize>,
    pub terminal: Option<Vec<f64>>,
    /// 0-based index of a declared absorbing cost-free state.
    pub absorbing: Option<usize>,
}

/// Checks invariants and returns a model. Rows off by at most 1e-9 are renormalized.
pub fn validate_model(raw: &RawModel) -> Result<PomdpModel> {
    let (x, u, y) = (raw.x, raw.u, raw.y);
    if x < 1 || u < 1 || y < 1 {
        return Err(Error::DimensionMismatch("X, U, Y must be positive".into()));
    }
    if raw.p.len() != u || raw.b.len() != u {
        return Err(Error::DimensionMismatch(format!(
            "expected {u} transition and observation matrices, got {} and {}",
            raw.p.len(),
            raw.b.len()
        )));
    }
    let mut p = Vec::with_capacity(u);
    let mut b = Vec::with_capacity(u);
    for a in 0..u {
        let mut pm = Matrix::from_rows(&raw.p[a])?;
        if pm.rows() != x || pm.cols() != x {
            return Err(Error::DimensionMismatch(format!("P({}) must be {x}x{x}", a + 1)));
        }
        pm.make_stochastic(a)?;
        let mut bm = Matrix::from_rows(&raw.b[a])?;
        if bm.rows() != x || bm.cols() != y {
            return Err(Error::DimensionMismatch(format!("B({}) must be {x}x{y}", a + 1)));
        }
        bm.make_stochastic(a)?;
        p.push(pm);
        b.push(bm);
    }
    let c = Matrix::from_rows(&raw.c)?;
    if c.rows() != x || c.cols() != u {
        return Err(Error::DimensionMismatch(format!("c must be {x}x{u}")));
    }
    if c.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite cost".into()));
    }
    if !(0.0..=1.0).contains(&raw.rho) {
        return Err(Error::InvalidProbability(format!("rho = {}", raw.rho)));
    }
    if let Some(t) = &raw.terminal {
        if t.len() != x {
            return Err(Error::DimensionMismatch("terminal cost must have X entries".into()));
        }
    }
    if raw.horizon == Some(0) {
        return Err(Error::Invalid("horizon must be positive".into()));
    }
    let absorbing = match raw.absorbing {
        None => None,
        Some(k) if k >= 1 && k <= x => {
            let s = k - 1;
            for a in 0..u {
                if p[a][(s, s)] != 1.0 || c[(s, a)] != 0.0 {
                    return Err(Error::Invalid(format!("state {k} is not absorbing and cost-free")));
                }
            }
            Some(s)
        }
        Some(k) => return Err(Error::DimensionMismatch(format!("absorbing state {k} out of range"))),
    };
    if raw.horizon.is_none() && raw.rho >= 1.0 && absorbing.is_none() {
        return Err(Error::Invalid("rho = 1 requires a horizon or an absorbing state".into()));
    }
    Ok(PomdpModel {
        x,
        u,
        y,
        p,
        b,
        c,
        rho: raw.rho,
        horizon: raw.horizon,
        terminal: raw.terminal.clone(),
        absorbing,
    })
}

impl PomdpModel {
    /// Builds and validates from matrices.
    pub fn new(p: Vec<Matrix>, b: Vec<Matrix>, c: Matrix, rho: f64) -> Result<Self> {
        let x = p.first().map_or(0, |m| m.rows());
        let y = b.first().map_or(0, |m| m.cols());
        let raw = RawModel {
            x,
            u: p.len(),
            y,
            p: p.iter().map(Matrix::to_rows).collect(),
            b: b.iter().map(Matrix::to_rows).collect(),
            c: c.to_rows(),
            rho,
            horizon: None,
            terminal: None,
            absorbing: None,
        };
        let mut raw = raw;
        if rho >= 1.0 {
            raw.horizon = Some(1);
        }
        let mut m = validate_model(&raw)?;
        if rho >= 1.0 {
            m.horizon = None;
        }
        Ok(m)
    }

    pub fn with_horizon(mut self, n: usize) -> Self {
        self.horizon = Some(n);
        self
    }

    pub fn with_terminal(mut self, t: Vec<f64>) -> Self {
        self.terminal = Some(t);
        self
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            x: self.x,
            u: self.u,
            y: self.y,
            p: self.p.iter().map(Matrix::to_rows).collect(),
            b: self.b.iter().map(Matrix::to_rows).collect(),
            c: self.c.to_rows(),
            rho: self.rho,
            horizon: self.horizon,
            terminal: self.terminal.clone(),
            absorbing: self.absorbing.map(|s| s + 1),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(s).map_err(|e| Error::Invalid(e.to_string()))?;
        validate_model(&raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("model serializes")
    }

    /// Cost vector `c_u` (length X).
    pub fn cost(&self, u: usize) -> Vec<f64> {
        self.c.col(u)
    }

    /// Terminal cost, zero when absent.
    pub fn terminal_cost(&self) -> Vec<f64> {
        self.terminal.clone().unwrap_or_else(|| vec![0.0; self.x])
    }

    pub fn max_abs_cost(&self) -> f64 {
        self.c.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Tensor `c̄(i, j, y, ȳ, u)` with shape X×X×Y×Y×U.
#[derive(Debug, Clone)]
pub struct CostTensor {
    pub x: usize,
    pub y: usize,
    pub u: usize,
    data: Vec<f64>,
}

impl CostTensor {
    pub fn zeros(x: usize, y: usize, u: usize) -> Self {
        CostTensor { x, y, u, data: vec![0.0; x * x * y * y * u] }
    }

    pub fn from_fn(x: usize, y: usize, u: usize, f: impl Fn(usize, usize, usize, usize, usize) -> f64) -> Self {
        let mut t = CostTensor::zeros(x, y, u);
        for i in 0..x {
            for j in 0..x {
                for a in 0..y {
                    for b in 0..y {
                        for k in 0..u {
                            let idx = t.index(i, j, a, b, k);
                            t.data[idx] = f(i, j, a, b, k);
                        }
                    }
                }
            }
        }
        t
    }

    fn index(&self, i: usize, j: usize, y: usize, yb: usize, u: usize) -> usize {
        (((i * self.x + j) * self.y + y) * self.y + yb) * self.u + u
    }

    pub fn get(&self, i: usize, j: usize, y: usize, yb: usize, u: usize) -> f64 {
        self.data[self.index(i, j, y, yb, u)]
    }
}

/// `c(i,u) = Σ_y Σ_ȳ Σ_j c̄(i,j,y,ȳ,u) P_ij(u) B_jȳ(u) B_iy(u)`.
pub fn reduce_general_cost(tensor: &CostTensor, model: &PomdpModel) -> Result<Matrix> {
    reduce_general_cost_with(tensor, &model.p, &model.b)
}

/// As [`reduce_general_cost`] with explicit per-action transition and observation matrices.
pub fn reduce_general_cost_with(tensor: &CostTensor, p: &[Matrix], b: &[Matrix]) -> Result<Matrix> {
    let (x, y, u) = (tensor.x, tensor.y, tensor.u);
    if p.len() != u || b.len() != u {
        return Err(Error::DimensionMismatch("tensor action count".into()));
    }
    for a in 0..u {
        if p[a].rows() != x || p[a].cols() != x || b[a].rows() != x || b[a].cols() != y {
            return Err(Error::DimensionMismatch("tensor state/observation count".into()));
        }
    }
    let mut c = Matrix::zeros(x, u);
    for a in 0..u {
        for i in 0..x {
            let mut s = 0.0;
            for j in 0..x {
                for yy in 0..y {
                    for yb in 0..y {
                        s += tensor.get(i, j, yy, yb, a) * p[a][(i, j)] * b[a][(j, yb)] * b[a][(i, yy)];
                    }
                }
            }
            c[(i, a)] = s;
        }
    }
    Ok(c)
}

/// Observation kernel from Gaussian noise quantized at `y = 1..Y`:
/// `B_iy ∝ exp(-(y - g_i)^2 / (2Σ))`.
pub fn quantized_gaussian_observation(levels: &[f64], variance: f64, num_obs: usize) -> Result<Matrix> {
    if levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonIncreasingLevels);
    }
    if !(variance > 0.0) || num_obs < 2 {
        return Err(Error::Invalid("variance must be positive and Y >= 2".into()));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt();
    let mut b = Matrix::zeros(levels.len(), num_obs);
    for (i, &g) in levels.iter().enumerate() {
        // Shift the exponent by its maximum so that the row never underflows.
        let ex: Vec<f64> = (1..=num_obs).map(|y| -0.5 * (y as f64 - g).powi(2) / variance).collect();
        let top = ex.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let row: Vec<f64> = ex.iter().map(|e| norm * (e - top).exp()).collect();
        let s: f64 = row.iter().sum();
        for (y, v) in row.iter().enumerate() {
            b[(i, y)] = v / s;
        }
    }
    Ok(b)
}

/// Stop cost of a stopping model, as a function of the belief.
#[derive(Debug, Clone, PartialEq)]
pub enum StopCost {
    /// `C(π,1) = c'π`.
    Linear(Vec<f64>),
    /// `C(π,1) = φ'π − α (h'π)^2`.
    Quadratic { phi: Vec<f64>, h: Vec<f64>, alpha: f64 },
}

impl StopCost {
    pub fn eval(&self, pi: &[f64]) -> f64 {
        match self {
            StopCost::Linear(c) => dot(c, pi),
            StopCost::Quadratic { phi, h, alpha } => {
                let hp = dot(h, pi);
                dot(phi, pi) - alpha * hp * hp
            }
        }
    }
}

/// Stopping-time POMDP with actions 0 = stop (terminal) and 1 = continue.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingModel {
    pub p: Matrix,
    pub b: Matrix,
    pub continue_cost: Vec<f64>,
    pub stop_cost: StopCost,
    pub rho: f64,
}

impl StoppingModel {
    pub fn new(p: Matrix, b: Matrix, continue_cost: Vec<f64>, stop_cost: StopCost, rho: f64) -> Result<Self> {
        let x = p.rows();
        let mut p = p;
        let mut b = b;
        if p.cols() != x || b.rows() != x || continue_cost.len() != x {
            return Err(Error::DimensionMismatch("stopping model dimensions".into()));
        }
        p.make_stochastic(1)?;
        b.make_stochastic(1)?;
        match &stop_cost {
            StopCost::Linear(c) if c.len() != x => {
                return Err(Error::DimensionMismatch("stop cost length".into()))
            }
            StopCost::Quadratic { phi, h, alpha } => {
                if phi.len() != x || h.len() != x {
                    return Err(Error::DimensionMismatch("stop cost length".into()));
                }
                if !alpha.is_finite() || phi.iter().chain(h).any(|v| !v.is_finite()) {
                    return Err(Error::Invalid("quadratic coefficients must be finite".into()));
                }
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidProbability(format!("rho = {rho}")));
        }
        Ok(StoppingModel { p, b, continue_cost, stop_cost, rho })
    }

    pub fn num_states(&self) -> usize {
        self.p.rows()
    }

    /// Equivalent POMDP with an extra absorbing cost-free state (last index).
    /// Only linear stop costs can be embedded.
    pub fn embed(&self) -> Result<PomdpModel> {
        let StopCost::Linear(stop) = &self.stop_cost else {
            return Err(Error::Invalid("only linear stop costs embed into a POMDP".into()));
        };
        let x = self.num_states();
        let y = self.b.cols();
        let n = x + 1;
        let mut p_stop = Matrix::zeros(n, n);
        let mut p_cont = Matrix::zeros(n, n);
        for i in 0..x {
            p_stop[(i, x)] = 1.0;
            for j in 0..x {
                p_cont[(i, j)] = self.p[(i, j)];
            }
        }
        p_stop[(x, x)] = 1.0;
        p_cont[(x, x)] = 1.0;
        let mut b = Matrix::zeros(n, y);
        for i in 0..x {
            b.row_mut(i).copy_from_slice(self.b.row(i));
        }
        b.row_mut(x).iter_mut().for_each(|v| *v = 1.0 / y as f64);
        let mut c = Matrix::zeros(n, 2);
        for i in 0..x {
            c[(i, 0)] = stop[i];
            c[(i, 1)] = self.continue_cost[i];
        }
        let raw = RawModel {
            x: n,
            u: 2,
            y,
            p: vec![p_stop.to_rows(), p_cont.to_rows()],
            b: vec![b.to_rows(), b.to_rows()],
            c: c.to_rows(),
            rho: self.rho,
            horizon: None,
            terminal: None,
            absorbing: Some(n),
        };
        validate_model(&raw)
    }
}

/// Fully observed finite MDP. `c` is X×U.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub p: Vec<Matrix>,
    pub c: Matrix,
    pub rho: f64,
    pub terminal: Vec<f64>,
}

/// Stagewise values and policies; index 0 is the first decision epoch.
#[derive(Debug, Clone)]
pub struct MdpSolution {
    pub values: Vec<Vec<f64>>,
    pub policy: Vec<Vec<usize>>,
}

impl Mdp {
    pub fn new(p: Vec<Matrix>, c: Matrix, rho: f64, terminal: Vec<f64>) -> Result<Self> {
        let x = c.rows();
        if p.len() != c.cols() || terminal.len() != x {
            return Err(Error::DimensionMismatch("MDP dimensions".into()));
        }
        let mut p = p;
        for (a, m) in p.iter_mut().enumerate() {
            if m.rows() != x || m.cols() != x {
                return Err(Error::DimensionMismatch("MDP transition shape".into()));
            }
            m.make_stochastic(a)?;
        }
        Ok(Mdp { p, c, rho, terminal })
    }

    pub fn num_states(&self) -> usize {
        self.c.rows()
    }

    pub fn num_actions(&self) -> usize {
        self.c.cols()
    }

    /// Backward induction over `n` stages. Ties go to the lowest action.
    /// `values[k]` is the cost-to-go with `n - k` decisions left; `values[n]` is terminal.
    pub fn solve_finite(&self, n: usize) -> MdpSolution {
        let mut values = vec![self.terminal.clone()];
        let mut policy = Vec::new();
        for _ in 0..n {
            let next = values.last().unwrap();
            let (v, mu) = self.backup(next);
            values.push(v);
            policy.push(mu);
        }
        values.reverse();
        policy.reverse();
        MdpSolution { values, policy }
    }

    /// One Bellman backup.
    pub fn backup(&self, next: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let x = self.num_states();
        let mut v = vec![0.0; x];
        let mut mu = vec![0; x];
        for i in 0..x {
            let mut best = f64::INFINITY;
            for a in 0..self.num_actions() {
                let q = self.c[(i, a)] + self.rho * dot(self.p[a].row(i), next);
                if q < best - 1e-12 {
                    best = q;
                    mu[i] = a;
                }
            }
            v[i] = best;
        }
        (v, mu)
    }
}

/// Named counter-based generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// Independent sub-stream for shard `k` of a seeded computation.
pub fn shard_rng(seed: u64, k: u64) -> Rng {
    let mut r = rng(seed);
    r.set_stream(k + 1);
    r
}

/// Uniform draw from the simplex via normalized unit exponentials.
pub fn sample_simplex<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, Exp1};
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|e| *e /= s);
    v
}

/// Random row-stochastic matrix with uniformly distributed rows.
pub fn sample_stochastic<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let r: Vec<Vec<f64>> = (0..rows).map(|_| sample_simplex(rng, cols)).collect();
    Matrix::from_rows(&r).unwrap()
}

/// Draws a category from a probability vector.
pub fn sample_index<R: rand::Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}
