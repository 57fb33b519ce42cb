use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToricError {
    #[error("invalid input: {field}: {message}")]
    InvalidInput { field: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("polytope is unbounded")]
    Unbounded,

    #[error("polytope has empty interior")]
    EmptyInterior,

    #[error("polytope is not Delzant: {0}")]
    NotDelzant(String),

    #[error("vertex {vertex:?} is not Delzant: {active} active facets, normal determinant {det}")]
    NonDelzantVertex {
        vertex: Vec<String>,
        active: usize,
        det: i64,
    },

    #[error("invalid frame change: determinant {det} (must be 1)")]
    InvalidFrameChange { det: i64 },

    #[error("point {point:?} is not in the open interior (min facet value {min_facet:e})")]
    Domain { point: Vec<f64>, min_facet: f64 },

    #[error("matrix block is not positive-definite: {0}")]
    NotPositiveDefinite(String),

    #[error("singular matrix (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate integration region: {0}")]
    DegenerateRegion(String),

    #[error("rank-deficient polarization frame (rank {rank}, expected {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("arithmetic overflow in exact computation")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, ToricError>;

impl ToricError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ToricError::InvalidInput {
            field: field.into(),
            message: message.into(),
        }
    }
}
