use thiserror::Error;

use crate::estimator::LadderStep;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "extent mismatch: axis {axis_a} of the left operand has extent {extent_a}, \
         axis {axis_b} of the right operand has extent {extent_b}"
    )]
    DimensionMismatch {
        axis_a: usize,
        extent_a: usize,
        axis_b: usize,
        extent_b: usize,
    },

    #[error("axis {axis} is out of bounds for a tensor of rank {rank}")]
    AxisOutOfBounds { axis: usize, rank: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("{what} needs {required:.0} entries, over the limit of {limit}")]
    SizeLimit {
        what: String,
        required: f64,
        limit: usize,
    },

    #[error("contraction needs an intermediate of {predicted} entries, over the budget of {budget}")]
    Budget { predicted: usize, budget: usize },

    #[error("{what} is not injective (sigma_min = {sigma_min:e})")]
    NotInjective { what: String, sigma_min: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("inconsistent model: {0}")]
    Model(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("adaptive ladder stopped after {} steps: {source}", ladder.len())]
    LadderExhausted {
        ladder: Vec<LadderStep>,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes and machine-readable
/// error records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Resource,
    Numerical,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::AxisOutOfBounds { .. } => "axis_out_of_bounds",
            Error::Shape(_) => "invalid_shape",
            Error::SizeLimit { .. } => "size_limit",
            Error::Budget { .. } => "budget_exceeded",
            Error::NotInjective { .. } => "not_injective",
            Error::Argument(_) => "invalid_argument",
            Error::Model(_) => "invalid_model",
            Error::Unsupported(_) => "unsupported",
            Error::Numerical(_) => "numerical_failure",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::Format(_) => "format_error",
            Error::LadderExhausted { .. } => "ladder_budget_exhausted",
            Error::Io(_) => "io_error",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::SizeLimit { .. } | Error::Budget { .. } | Error::LadderExhausted { .. } => {
                ErrorClass::Resource
            }
            Error::Numerical(_) | Error::DegenerateFit(_) => ErrorClass::Numerical,
            _ => ErrorClass::Input,
        }
    }
}
