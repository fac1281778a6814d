use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by forecasters, statistics, generators and bound verifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The multiplicative update left its validity window: some `eta * x`
    /// dropped below -1/2, meaning the payoff bound the learning rate was
    /// tuned against was wrong.
    #[error("validity violation: expert {expert} has eta*x = {z} < -1/2")]
    ValidityViolation { expert: usize, z: f64 },

    #[error("payoff {value} of expert {expert} exceeds the declared bound {bound}")]
    PayoffBoundExceeded {
        expert: usize,
        value: f64,
        bound: f64,
    },

    #[error("missing statistic required for bound evaluation: {0}")]
    MissingStatistic(&'static str),

    /// Configuration errors: an algorithm/bound mismatch, an unverifiable
    /// precondition, or an inconsistent run setup.
    #[error("configuration error: {0}")]
    Config(String),
}
