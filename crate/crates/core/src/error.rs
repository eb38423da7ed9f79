use thiserror::Error;

/// Errors produced anywhere in the simulator and filter pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("polynomial approximation failed: {0}")]
    Approximation(String),

    #[error("phase solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("unsupported parity: degree {0} is even")]
    UnsupportedParity(usize),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("singular value {sigma:e} outside [{lower:e}, 1]")]
    OutOfRange { sigma: f64, lower: f64 },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the filter step at which it surfaced.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, skipping step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code for this error category.
    ///
    /// | code | category |
    /// |------|----------|
    /// | 2 | configuration / usage |
    /// | 3 | dimension mismatch |
    /// | 4 | numerical failure (SVD, phase solver, approximation) |
    /// | 5 | domain, precondition, singular or out-of-range input |
    /// | 6 | I/O |
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config { .. } => 2,
            Error::Dimension(_) => 3,
            Error::Numerical(_) | Error::Approximation(_) | Error::SolverFailure { .. } => 4,
            Error::Degenerate(_)
            | Error::Precondition(_)
            | Error::Domain(_)
            | Error::UnsupportedParity(_)
            | Error::Singular(_)
            | Error::OutOfRange { .. } => 5,
            Error::Io(_) => 6,
            Error::AtStep { .. } => unreachable!("root() strips step annotations"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
