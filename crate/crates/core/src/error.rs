use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration, detected before or during a run.
    #[error("configuration error: {0}")]
    Config(String),

    /// A delay read outside the available history.
    #[error("delay out of range: tau[{j},{i}]({n}) = {tau}")]
    DelayOutOfRange { j: usize, i: usize, n: u64, tau: i64 },

    /// Bounded-window history asked for an entry that has already been evicted.
    #[error("delay {tau} at tick {n} exceeds the history window of {window}")]
    WindowExceeded { n: u64, tau: u64, window: usize },

    /// A non-finite iterate component was produced.
    #[error("divergence at tick {n}: component {component} became {value}")]
    Divergence { n: u64, component: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix {index} is not symmetric positive definite (min eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { index: usize, min_eigenvalue: f64 },

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("value iteration did not converge within {iterations} iterations (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// An agent was never active, so a ratio of step-size sums is undefined.
    #[error("agent {agent} has not been active by tick {n}")]
    InsufficientActivation { agent: usize, n: usize },

    #[error("misaligned traces: {0}")]
    Misaligned(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
