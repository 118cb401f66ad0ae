//! Command layer over `cartanlab-core`: job configuration, parallel
//! evaluation, JSON reports and CSV convergence tables.

pub mod config;
pub mod jobs;
pub mod par;
pub mod report;

use cartanlab_core::automorphism::AutomorphismError;
use cartanlab_core::expr::ParseError;
use cartanlab_core::expr::EvalError;
use cartanlab_core::geometry::GeometryError;
use cartanlab_core::quadrature::QuadratureError;

pub use config::JobConfig;
pub use jobs::{Command, Output, Setup};
pub use report::Report;

/// Anything wrong with the input rather than with the mathematics.
/// All variants exit with status 2.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot parse {what}: {err}")]
    Parse { what: String, err: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Automorphism(#[from] AutomorphismError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
