//! Error classification behind the stable exit-code contract:
//! 0 success, 1 I/O or serialization, 2 validation, 3 solver failure,
//! 4 verification failure.  Every error path prints one machine-readable
//! JSON line to stderr.

use mvu_core::grid::GridError;
use mvu_core::mc::McError;
use mvu_core::model::ModelError;
use mvu_core::solver::SolveError;
use mvu_core::verifier::VerifyError;
use thiserror::Error;

pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    ConfigParse { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Simulation(#[from] McError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serializing output: {0}")]
    Json(#[from] serde_json::Error),
}

fn classify_solve(err: &SolveError) -> i32 {
    match err {
        SolveError::Model(_) | SolveError::Grid(_) => EXIT_VALIDATION,
        // Everything discovered while solving — non-convergence, method
        // disagreement, missing consumption root, violated wealth
        // condition — means no usable solution was produced.
        _ => EXIT_CONVERGENCE,
    }
}

fn classify_mc(err: &McError) -> i32 {
    match err {
        McError::NonFinite { .. } => EXIT_CONVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

fn classify_verify(err: &VerifyError) -> i32 {
    match err {
        VerifyError::Solve(e) => classify_solve(e),
        VerifyError::Simulation(e) => classify_mc(e),
        VerifyError::Cell { source, .. } => classify_verify(source),
        _ => EXIT_VALIDATION,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::ConfigParse { .. } => EXIT_VALIDATION,
            CliError::Model(_) | CliError::Grid(_) => EXIT_VALIDATION,
            CliError::Solve(e) => classify_solve(e),
            CliError::Simulation(e) => classify_mc(e),
            CliError::Verify(e) => classify_verify(e),
            CliError::Io(_) | CliError::Json(_) => EXIT_IO,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_VALIDATION => "validation",
            EXIT_CONVERGENCE => "convergence",
            EXIT_VERIFICATION => "verification",
            _ => "io",
        }
    }

    /// One-line JSON for stderr: `{"error":{"exit_code":..,"kind":..,"message":..}}`.
    pub fn render_json(&self) -> String {
        serde_json::json!({
            "error": {
                "exit_code": self.exit_code(),
                "kind": self.kind(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}
