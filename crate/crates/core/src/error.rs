use thiserror::Error;

/// Errors raised by mesh construction, discretization and time stepping.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("invariant set violated: {quantity} = {value:e}{}", location.map(|(e, i)| format!(" at element {e}, node {i}")).unwrap_or_default())]
    InvariantViolation {
        quantity: &'static str,
        value: f64,
        location: Option<(usize, usize)>,
    },

    #[error("non-finite value after Runge-Kutta stage {stage}")]
    NonFinite { stage: usize },

    #[error("steady-state iteration diverged at step {step}: r = {residual:e}")]
    Divergence { step: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach an element/node location to an invariant violation.
    pub fn at(self, element: usize, node: usize) -> Self {
        match self {
            Error::InvariantViolation {
                quantity, value, ..
            } => Error::InvariantViolation {
                quantity,
                value,
                location: Some((element, node)),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
