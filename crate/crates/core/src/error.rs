use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BinnError {
    #[error("argument outside function domain: {0}")]
    Domain(String),

    #[error("Bessel order {order} exceeds supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("cannot mesh boundary: {0}")]
    Meshing(String),

    #[error("kernel evaluated at coincident points; route through singular quadrature")]
    SingularEvaluation,

    #[error("non-finite influence coefficient at collocation point {row}, column {col}")]
    Assembly { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("boundary condition does not cover collocation point {index} at ({x}, {y})")]
    BoundaryCondition { index: usize, x: f64, y: f64 },

    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },

    #[error("training diverged at iteration {iteration} (loss {loss:e})")]
    Divergence {
        iteration: usize,
        loss: f64,
        /// `(iteration, loss)` pairs logged before the failure.
        history: Vec<(usize, f64)>,
    },

    #[error("linear system numerically singular (condition estimate {condition:e}); wave number may be near a fictitious frequency")]
    SingularSystem { condition: f64 },

    #[error("reference vector has zero norm in the {0} component")]
    UndefinedNormalization(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("malformed model file, line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, BinnError>;
