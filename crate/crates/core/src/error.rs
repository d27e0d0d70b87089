use thiserror::Error;

/// Errors produced by the library. Every public operation that can reject its
/// input returns one of these; nothing in the crate panics on bad input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("k = {0} must be even")]
    OddOrder(usize),

    #[error("{what} = {value} is out of range ({range})")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: &'static str,
    },

    #[error("pair partition contains a crossing")]
    Crossing,

    #[error("invalid pair partition: {0}")]
    InvalidPartition(String),

    #[error("invalid weight `{spec}`: {reason}")]
    InvalidWeight { spec: String, reason: String },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid relation: {0}")]
    InvalidRelation(String),

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (relative off-diagonal norm {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        range: &'static str,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            range,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
