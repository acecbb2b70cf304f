use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported arity {arity}: {reason}")]
    UnsupportedArity { arity: usize, reason: String },

    /// A backend was handed an instance it cannot process.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    /// A materialization guard (vertex cap, assignment cap) was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("{stage} did not converge after {iterations} iterations (best estimate {best})")]
    Convergence {
        stage: &'static str,
        iterations: usize,
        best: f64,
    },

    /// A backend output failed the pseudo-expectation checks.
    #[error("invalid pseudo-expectation: {0}")]
    InvalidPseudoExpectation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
