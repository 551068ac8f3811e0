use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while setting up or solving an optimal-control problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OcpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("non-finite dynamics output at stage {stage}")]
    Integration { stage: usize },
    #[error("non-finite output while linearizing stage {stage}")]
    Linearization { stage: usize },
}

/// Errors from the dense QP subproblem solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("hessian is not positive definite")]
    NotConvex,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("iteration limit reached after {0} iterations")]
    IterationLimit(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Configuration and file-format errors. Validation collects every problem it
/// finds so the user can fix a file in one pass.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("map is empty")]
    EmptyMap,
}

impl ConfigError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        ConfigError::Invalid(vec![msg.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ConfigError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Faults raised while a simulation is running.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite plant state at step {step}")]
    NonFinite { step: usize },
    #[error("vehicle left the reference path by {deviation:.2} m at t = {time:.3} s")]
    OffPath { deviation: f64, time: f64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Errors from turning a simulation log into plot tables.
#[derive(Debug, Error)]
pub enum PlotError {
    #[error("{figure} panel {panel}: log is missing column(s) {missing:?}")]
    MissingColumns {
        figure: String,
        panel: String,
        missing: Vec<String>,
    },
    #[error("log {0} has no data rows")]
    EmptyLog(PathBuf),
    #[error("unknown figure '{0}' (expected fig3, fig4, fig5 or fig6)")]
    UnknownFigure(String),
    #[error("malformed log: {0}")]
    Malformed(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
