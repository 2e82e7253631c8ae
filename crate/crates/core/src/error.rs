use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exact regime exceeded: n = {n} is above the enumeration cap {cap}; use a Monte Carlo workflow")]
    ExactRegimeExceeded { n: usize, cap: usize },

    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("malformed encoding: {0}")]
    MalformedEncoding(String),

    #[error("no automorphism witness: class {pattern} has {source_size} indices in the source but {target_size} in the target")]
    NoWitness {
        pattern: usize,
        source_size: usize,
        target_size: usize,
    },

    #[error("sequence is not admissible (c2 = {c2})")]
    NotAdmissible { c2: f64 },

    #[error("threshold bracket not established for theta = {theta}: emptiness probability at p = 1 is {at_one}")]
    BracketNotEstablished { theta: f64, at_one: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
