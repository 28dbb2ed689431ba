use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spin index {index} out of range for a {n_spins}-spin system")]
    IndexOutOfRange { index: usize, n_spins: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("points are closer than {min_distance} angstrom")]
    CoincidentPoints { min_distance: f64 },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tensor is not symmetric (antisymmetric norm {0:e})")]
    AsymmetricTensor(f64),

    #[error("zero-norm operator")]
    ZeroNorm,

    #[error("cannot parse product operator `{0}`")]
    OperatorSyntax(String),

    #[error("process {0} does not apply to this spin system")]
    ProcessNotApplicable(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("iterative solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("all evaluations failed: {0}")]
    AllEvaluationsFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
