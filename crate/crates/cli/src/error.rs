use std::fmt;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    /// Unreadable or malformed input file.
    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("{stage}: {source}")]
    Solver {
        stage: &'static str,
        source: rpcsp::Error,
    },

    #[error("writing {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output { .. } => 1,
            CliError::Input { .. } => 2,
            CliError::Solver { .. } => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn input(path: impl fmt::Display, msg: impl fmt::Display) -> Self {
        CliError::Input {
            path: path.to_string(),
            message: msg.to_string(),
        }
    }

    /// Classifies a library error raised during `stage`.
    pub fn from_lib(stage: &'static str, e: rpcsp::Error) -> Self {
        use rpcsp::Error as E;
        match e {
            E::Resource(_) | E::Convergence { .. } | E::InvalidPseudoExpectation(_) => {
                CliError::Solver { stage, source: e }
            }
            _ => CliError::Usage(format!("{stage}: {e}")),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
