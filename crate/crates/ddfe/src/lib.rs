//! Data-driven finite elasticity at desk scale.
//!
//! This crate implements two things that belong together:
//!
//! * a solver for the data-driven boundary-value problem of finite
//!   elasticity on triangulated 2D domains — find the compatible and
//!   equilibrated state `(F, P)` whose distance in phase space to a material
//!   data set is minimal — together with a classical Newton reference
//!   solver and discrete diagnostics;
//! * a certification toolkit that searches for violations of the structural
//!   hypotheses (coercivity, polymonotonicity, quasimonotonicity, growth,
//!   frame indifference, moment equilibrium) on explicit 2D and 3D material
//!   laws and on point-cloud data sets.
//!
//! Start with the `examples/` directory: each example is a runnable
//! walkthrough of one capability. The `ddfe` binary exposes the same
//! pipelines as subcommands (`gen-data`, `certify`, `solve-classical`,
//! `solve-dd`, `study-convergence`, `report`).

pub mod certify;
pub mod cli;
pub mod data;
mod dense;
pub mod fem;
pub mod io;
mod kdtree;
pub mod model;
pub mod rng;
pub mod solver;
mod sparse;
pub mod tensor;

pub use data::{DataSetKind, DeviationPair, LocalDataSet, PhasePoint};
pub use model::{ConvexScalarG, EnergyModel, Flavor};
pub use tensor::{cof, dot, minors, polar_rotation_part, random_rotation, Mat, MinorVector};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("matrix is singular or orientation-reversing")]
    Singular,
    #[error("empty data set")]
    EmptyDataSet,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Residual norm per iteration, for diagnosis.
        history: Vec<f64>,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
