use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fractional order {0} is outside the open interval (1, 2)")]
    OrderOutOfRange(f64),

    #[error("invalid size: {0}")]
    Size(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("axis {axis} out of range for a {dim}-dimensional field")]
    Axis { axis: usize, dim: usize },

    #[error("maximum principle violated{}: |u[{index}]| = {value:e} exceeds 1", step_suffix(.step))]
    MaxPrinciple {
        step: Option<usize>,
        index: usize,
        value: f64,
    },

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e} after spectral transform")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

fn step_suffix(step: &Option<usize>) -> String {
    match step {
        Some(s) => format!(" at step {s}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
