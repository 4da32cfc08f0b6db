use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while building, solving or writing a problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{field}: {message}")]
    Field { field: String, message: String },

    #[error("non-finite sample at node {node}")]
    NonFinite { node: usize },

    #[error("dimension mismatch in {block}: expected {expected}, got {got}")]
    Dimension {
        block: String,
        expected: usize,
        got: usize,
    },

    #[error(
        "step matrix is singular at node {node} (h = {step:e}, |A| = {matrix_norm:e}); \
         refine the grid"
    )]
    SingularStep {
        node: usize,
        step: f64,
        matrix_norm: f64,
    },

    #[error("solution blew up at node {node} (non-finite value)")]
    BlowUp { node: usize },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("node 0 is singular: the state carries a t^(alpha-1) term with nonzero coefficient")]
    SingularNode,

    #[error("node index {index} out of range 0..={last}")]
    NodeOutOfRange { index: usize, last: usize },

    #[error(
        "Mittag-Leffler argument |z| = {z} exceeds the series budget {budget}; \
         use a smaller horizon"
    )]
    SeriesBudget { z: f64, budget: f64 },

    #[error("Mittag-Leffler series lost precision (cancellation ratio {ratio:e}); use a smaller horizon")]
    SeriesPrecision { ratio: f64 },

    #[error("alpha = {alpha} is outside (1/2, 1), the range where the optimality conditions hold")]
    OptimalityRange { alpha: f64 },

    #[error("cost became non-finite at sweep iteration {iteration}")]
    NonFiniteCost { iteration: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: refusing to overwrite existing file (pass --force)")]
    Collision { path: PathBuf },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than a failing solve.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::Field { .. }
                | Error::Dimension { .. }
                | Error::OptimalityRange { .. }
                | Error::Collision { .. }
                | Error::Parse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
