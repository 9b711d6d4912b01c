//! POMDP toolkit: exact and approximate solvers, stochastic-order checks,
//! structural-result verifiers, myopic policy bounds and policy-gradient
//! threshold fitting.
//!
//! The Rust API indexes states, actions and observations from 0. JSON, CSV,
//! CLI and C interfaces index from 1.

pub mod apps;
pub mod bounds;
pub mod error;
pub mod filters;
pub mod lp;
pub mod model;
pub mod myopic;
pub mod orders;
pub mod solver;
pub mod spsa;
pub mod structural;

pub use error::{Error, Result};
pub use model::{Matrix, PomdpModel};

/// Formats a number with at most 12 significant digits.
pub fn fmt12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    format!("{rounded}")
}
