//! Named models loadable from the command line.

use super::bandit::Project;
use super::machine::build_machine_replacement;
use super::quickest::{build_classical_detection, build_quickest_detection, DelayKind, QuickestDetection, QuickestParams};
use super::sampling::{build_sampling_control, SamplingControl};
use super::search::{build_search_pomdp, SearchCost};
use super::social::SocialParams;
use super::transmission::{build_transmission_scheduling, TransmissionMdp};
use crate::error::{Error, Result};
use crate::model::{quantized_gaussian_observation, Matrix, PomdpModel};
use serde::Deserialize;

pub const PRESET_NAMES: &[&str] = &[
    "machine-replacement",
    "qd-classical",
    "qd-ph",
    "sampling",
    "search",
    "social",
    "bandit",
    "transmission",
    "example1",
    "example2",
    "example3",
    "example4",
];

#[derive(Debug, Clone)]
pub enum Preset {
    Pomdp(PomdpModel),
    Detection(QuickestDetection),
    Sampling(SamplingControl),
    Social(SocialParams),
    Bandit(Project),
    Transmission(TransmissionMdp),
}

impl Preset {
    /// The underlying POMDP, embedding stopping problems when they are linear.
    pub fn to_pomdp(&self) -> Result<PomdpModel> {
        match self {
            Preset::Pomdp(m) => Ok(m.clone()),
            Preset::Detection(q) => q.model.embed(),
            Preset::Sampling(s) => s.to_pomdp(),
            _ => Err(Error::Invalid("preset is not a POMDP".into())),
        }
    }
}

fn normalized(rows: Vec<Vec<f64>>) -> Result<Matrix> {
    let mut m = Matrix::from_rows(&rows)?;
    m.normalize_rows();
    Ok(m)
}

pub fn example1(rho: f64) -> Result<PomdpModel> {
    let p2 = normalized(vec![vec![1.0, 0.0, 0.0], vec![0.4677, 0.4149, 0.1174], vec![0.3302, 0.5220, 0.1478]])?;
    let p1 = p2.mul(&p2);
    let b1 = normalized(vec![vec![0.6373, 0.3405, 0.0222], vec![0.3118, 0.6399, 0.0483], vec![0.0422, 0.8844, 0.0734]])?;
    let b2 = normalized(vec![vec![0.5927, 0.3829, 0.0244], vec![0.4986, 0.4625, 0.0389], vec![0.1395, 0.79, 0.0705]])?;
    let c = Matrix::new(&[[1.0, 1.5002], [1.5045, 1.0], [1.8341, 1.0]]);
    PomdpModel::new(vec![p1, p2], vec![b1, b2], c, rho)
}

#[derive(Deserialize)]
struct Example2Data {
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<f64>>>,
    c_printed: Vec<Vec<f64>>,
}

pub fn example2(rho: f64) -> Result<PomdpModel> {
    let d: Example2Data = serde_json::from_str(include_str!("../../data/example2.json")).map_err(|e| Error::Invalid(e.to_string()))?;
    let b = normalized(d.b)?;
    let p = d.p.into_iter().map(normalized).collect::<Result<Vec<_>>>()?;
    let c = Matrix::from_rows(&d.c_printed)?.transpose();
    PomdpModel::new(p, vec![b.clone(), b], c, rho)
}

#[derive(Deserialize)]
struct Example3Data {
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<f64>>>,
    c: Vec<Vec<f64>>,
    epsilon: f64,
}

/// Tridiagonal `Υ_ε` observation matrix.
pub fn tridiagonal_observation(x: usize, eps: f64) -> Matrix {
    let mut b = Matrix::zeros(x, x);
    for i in 0..x {
        b[(i, i)] = eps;
    }
    b[(0, 1)] = 1.0 - eps;
    b[(x - 1, x - 2)] = 1.0 - eps;
    for i in 1..x - 1 {
        b[(i, i - 1)] = (1.0 - eps) / 2.0;
        b[(i, i + 1)] = (1.0 - eps) / 2.0;
    }
    b
}

pub fn example3(rho: f64) -> Result<PomdpModel> {
    let d: Example3Data = serde_json::from_str(include_str!("../../data/example3.json")).map_err(|e| Error::Invalid(e.to_string()))?;
    let p = d.p.into_iter().map(normalized).collect::<Result<Vec<_>>>()?;
    let x = p.len();
    let b = tridiagonal_observation(x, d.epsilon);
    let c = Matrix::from_rows(&d.c)?;
    PomdpModel::new(p, vec![b; x], c, rho)
}

pub fn example4(theta1: f64, theta2: f64, rho: f64) -> Result<PomdpModel> {
    if !(0.0..=0.5).contains(&theta1) || !(0.0..=0.5).contains(&theta2) {
        return Err(Error::InvalidProbability(format!("theta = ({theta1}, {theta2})")));
    }
    let p2 = Matrix::new(&[[1.0, 0.0, 0.0], [1.0 - 2.0 * theta1, theta1, theta1], [1.0 - 2.0 * theta2, theta2, theta2]]);
    let p1 = p2.mul(&p2);
    let b = quantized_gaussian_observation(&[1.0, 2.0, 3.0], 1.0, 5)?;
    let c = Matrix::new(&[[1.0, 1.2], [1.1, 1.1], [1.2, 1.1]]);
    PomdpModel::new(vec![p1, p2], vec![b.clone(), b], c, rho)
}

pub fn bandit_project() -> Result<Project> {
    Project::new(Matrix::new(&[[0.9, 0.1], [0.2, 0.8]]), Matrix::new(&[[0.8, 0.2], [0.3, 0.7]]), vec![0.2, 1.0], 0.8)
}

pub fn sampling_example() -> Result<SamplingControl> {
    let p = Matrix::new(&[[1.0, 0.0], [0.1, 0.9]]);
    let b = Matrix::new(&[[0.3, 0.7, 0.0], [0.0, 0.2, 0.8]]);
    let m = Matrix::from_rows(&[vec![0.0; 4], vec![0.1647; 4]])?;
    build_sampling_control(p, b, &[1, 3, 5, 10], &m, 0.0235, 1.0)
}

fn parse_example4(args: &str) -> Result<(f64, f64)> {
    let inner = args.trim_start_matches(['(', ':']).trim_end_matches(')');
    let v: Vec<f64> = inner.split(',').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| Error::Invalid(format!("bad example4 parameters '{args}'")))?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Invalid("example4 takes two parameters".into())),
    }
}

/// Loads a preset by name; `rho` overrides the discount of POMDP presets.
/// `example4` accepts parameters as `example4(θ1,θ2)` or `example4:θ1,θ2`.
pub fn load_preset(name: &str, rho: Option<f64>) -> Result<Preset> {
    let r = |d: f64| rho.unwrap_or(d);
    if let Some(args) = name.strip_prefix("example4") {
        let (t1, t2) = if args.is_empty() { (0.2, 0.3) } else { parse_example4(args)? };
        return Ok(Preset::Pomdp(example4(t1, t2, r(0.9))?));
    }
    Ok(match name {
        "machine-replacement" => Preset::Pomdp(build_machine_replacement(0.2, 0.9, 0.8, 4.0, [3.0, 0.0], r(0.9))?),
        "qd-classical" => Preset::Detection(build_classical_detection(0.9, Matrix::new(&[[0.7, 0.3], [0.3, 0.7]]), 0.05)?),
        "qd-ph" => Preset::Detection(build_quickest_detection(QuickestParams {
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
            rho: r(0.9),
        })?),
        "sampling" => Preset::Sampling(sampling_example()?),
        "search" => Preset::Pomdp(build_search_pomdp(
            &Matrix::new(&[[0.8, 0.2], [0.3, 0.7]]),
            &[vec![0], vec![1]],
            &[0.2, 0.3],
            &[0.1, 0.1],
            &SearchCost::MinDelay,
            r(0.95),
        )?),
        "social" => Preset::Social(SocialParams { rho: r(0.9), ..SocialParams::example() }),
        "bandit" => Preset::Bandit(bandit_project()?),
        "transmission" => Preset::Transmission(build_transmission_scheduling(
            Matrix::new(&[[0.8, 0.2], [0.3, 0.7]]),
            vec![0.6, 0.1],
            4,
            10,
            [0.0, 1.0],
            (0..=4).map(|i| 2.0 * (i * i) as f64).collect(),
        )?),
        "example1" => Preset::Pomdp(example1(r(0.9))?),
        "example2" => Preset::Pomdp(example2(r(0.9))?),
        "example3" => Preset::Pomdp(example3(r(0.9))?),
        _ => return Err(Error::Invalid(format!("unknown preset '{name}'"))),
    })
}
