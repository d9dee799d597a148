use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integration unstable at step {step} (t = {t}): |value| = {value} exceeds 10")]
    Instability { step: usize, t: f64, value: f64 },

    #[error("integration left the valid region at step {step} (t = {t}): {detail}")]
    OutOfBounds { step: usize, t: f64, detail: String },

    #[error(
        "probability bound violated at step {step}, node {node}: p = {p}, q = {q}, w = {w} \
         (the update leaves [0, 1] when delta exceeds zeta; parameter regime not admissible)"
    )]
    BoundViolation {
        step: usize,
        node: usize,
        p: f64,
        q: f64,
        w: f64,
    },

    #[error(
        "node {node}: chi + delta = {sum} > 1 makes the warned-state coefficient negative"
    )]
    NegativeCoefficient { node: usize, sum: f64 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid cycle: {0}")]
    InvalidCycle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
