use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("vertex {vertex} has non-positive depth {depth} in view {view}")]
    Projection { view: usize, vertex: usize, depth: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver stalled: damping {lambda:e} exceeded limit at cost {cost:e} (gradient norm {gradient_norm:e})")]
    SolverStall {
        lambda: f64,
        cost: f64,
        gradient_norm: f64,
    },

    #[error("sphere fit failed: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
