use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// Shapes of vectors or matrices do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The closed form is undefined at this input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// No admissible solution exists for the requested target.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A bound was requested outside the regime where it is meaningful.
    #[error("bound is vacuous: {0}")]
    Regime(String),

    /// A configuration key failed validation.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    /// Error raised inside one Monte Carlo trial.
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 for configuration and I/O problems, 2 for
    /// numerical or feasibility failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) => 1,
            Error::Trial { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be non-negative and finite, got {value}"
        )))
    }
}
