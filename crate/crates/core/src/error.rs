use serde::Serialize;
use thiserror::Error;

/// Which transformed-cost polytope was empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polytope {
    C1,
    C2,
}

impl std::fmt::Display for Polytope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polytope::C1 => write!(f, "C1"),
            Polytope::C2 => write!(f, "C2"),
        }
    }
}

/// Every failure the library can report. Indices carried here are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row {row} of action {action} sums to {sum}")]
    NonStochasticRow { action: usize, row: usize, sum: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative entry: {0}")]
    NegativeEntry(String),
    #[error("observation levels must be strictly increasing")]
    NonIncreasingLevels,
    #[error("exact copositivity test only supports 2 states")]
    UnsupportedExact,
    #[error("matrix is not TP2: minor {minor} at rows ({i1},{i2}) cols ({j1},{j2})")]
    NotTP2 { i1: usize, i2: usize, j1: usize, j2: usize, minor: f64 },
    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),
    #[error("MLR ordering violated at step {0}")]
    OrderingViolation(usize),
    #[error("linear program numeric failure: {0}")]
    LpNumericFailure(String),
    #[error("observation has zero likelihood (sigma = {0})")]
    ZeroLikelihood(f64),
    #[error("vector set blew up at stage {stage}: {size} vectors")]
    Blowup { stage: usize, size: usize },
    #[error("transformed-cost polytope {0} is empty")]
    Infeasible(Polytope),
    #[error("no simultaneous maximizer exists for the overlap problem")]
    NoMaximizer,
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("states 2..X are not transient")]
    NonTransient,
    #[error("prior puts mass on the absorbing state")]
    PriorMassOnState1,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("policy is not monotone: inversion at grid index {index} ({from} -> {to})")]
    NotMonotone { index: usize, from: usize, to: usize },
    #[error("beliefs are not MLR comparable")]
    NotComparable,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable kind name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonStochasticRow { .. } => "NonStochasticRow",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NegativeEntry(_) => "NegativeEntry",
            Error::NonIncreasingLevels => "NonIncreasingLevels",
            Error::UnsupportedExact => "UnsupportedExact",
            Error::NotTP2 { .. } => "NotTP2",
            Error::LpInfeasible(_) => "LpInfeasible",
            Error::OrderingViolation(_) => "OrderingViolation",
            Error::LpNumericFailure(_) => "LpNumericFailure",
            Error::ZeroLikelihood(_) => "ZeroLikelihood",
            Error::Blowup { .. } => "Blowup",
            Error::Infeasible(_) => "Infeasible",
            Error::NoMaximizer => "NoMaximizer",
            Error::InvalidProbability(_) => "InvalidProbability",
            Error::NonTransient => "NonTransient",
            Error::PriorMassOnState1 => "PriorMassOnState1",
            Error::PreconditionFailed(_) => "PreconditionFailed",
            Error::NotMonotone { .. } => "NotMonotone",
            Error::NotComparable => "NotComparable",
            Error::Invalid(_) => "Invalid",
        }
    }

    /// Process exit code used by the CLI: 2 validation, 3 infeasible, 4 blowup.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::LpInfeasible(_) | Error::Infeasible(_) | Error::NoMaximizer => 3,
            Error::Blowup { .. } => 4,
            _ => 2,
        }
    }

    /// Stable negative integer code for the C ABI.
    pub fn code(&self) -> i32 {
        match self {
            Error::NonStochasticRow { .. } => -1,
            Error::DimensionMismatch(_) => -2,
            Error::NegativeEntry(_) => -3,
            Error::NonIncreasingLevels => -4,
            Error::UnsupportedExact => -5,
            Error::NotTP2 { .. } => -6,
            Error::LpInfeasible(_) => -7,
            Error::OrderingViolation(_) => -8,
            Error::LpNumericFailure(_) => -9,
            Error::ZeroLikelihood(_) => -10,
            Error::Blowup { .. } => -11,
            Error::Infeasible(_) => -12,
            Error::NoMaximizer => -13,
            Error::InvalidProbability(_) => -14,
            Error::NonTransient => -15,
            Error::PriorMassOnState1 => -16,
            Error::PreconditionFailed(_) => -17,
            Error::NotMonotone { .. } => -18,
            Error::NotComparable => -19,
            Error::Invalid(_) => -20,
        }
    }

    /// JSON object `{"error": kind, "message": text}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() })
    }
}
