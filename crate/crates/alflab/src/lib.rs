//! Numerical laboratory for the one-parameter Taub-NUT family of hyperkähler
//! metrics on C², built from LeBrun's implicit potential.
//!
//! The crate verifies the closed-form identities of the family (Kähler form,
//! moment maps, Gibbons-Hawking shape, frames, curvature decay), checks the
//! binary dihedral symmetry of the potential, performs the cutoff-based
//! potential gluing that produces an ALF Kähler form out of an ALE model, and
//! solves the associated complex Monge-Ampère equation on a truncated domain
//! by a Newton continuity method.

pub mod cli;
pub mod curvature;
pub mod dihedral;
pub mod gluing;
pub mod monge_ampere;
pub mod rng;
pub mod taubnut;
pub mod tensor;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("operation undefined at the origin of C^2")]
    Origin,
    #[error("closed form singular on the axis z{axis} = 0 (|z{axis}| = {modulus:.3e})")]
    OnAxis { axis: u8, modulus: f64 },
    #[error("mass parameter must be positive, got {0}")]
    InvalidMass(f64),
    #[error("form is not positive at {point:?}: eigenvalues {eigs:?}")]
    NotPositive { point: [f64; 4], eigs: [f64; 4] },
    #[error("gluing parameters rejected: {0}")]
    BadGluingConfig(String),
    #[error("linear solver stalled: relative residual {residual:.3e} after {iters} iterations")]
    SolverStall { residual: f64, iters: usize },
    #[error("continuity path left the Kähler cone; last good t = {last_t}")]
    ConeExit { last_t: f64 },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Least-squares slope of log|y| against log(x); used by every decay check.
pub fn log_log_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.abs() > 0.0)
        .map(|&(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
