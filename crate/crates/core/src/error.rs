use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("x^5 - {0} is reducible over Q (m must be >= 2 and not a fifth power)")]
    Reducible(i64),

    #[error("x^5 - {0} is not monogenic; the non-monogenic extension is not implemented")]
    NotMonogenic(i64),

    #[error("precision failure: {0}")]
    Precision(String),

    #[error("unit file {path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("unit file {path}: {msg}")]
    Arity { path: PathBuf, msg: String },

    #[error("unit file is for m = {found}, expected m = {expected}")]
    FieldMismatch { expected: i64, found: i64 },

    #[error("unit {unit} does not have norm +-1 (resultant {resultant}, expected +-{expected})")]
    NormCheck { unit: usize, resultant: String, expected: String },

    #[error("units are not multiplicatively independent: {0}")]
    RankDeficient(String),

    #[error("sieve precondition violated: {0}")]
    SievePrecondition(String),

    #[error("no regular choice of five triples: {0}")]
    NoRegularTriples(String),

    #[error("only {found} admissible sieve primes below {limit}, need {needed}")]
    NotEnoughPrimes { found: usize, needed: usize, limit: u64 },

    #[error("prime {p} is not admissible: {reason}")]
    InadmissiblePrime { p: u64, reason: String },

    #[error("no well-conditioned set of four pairs for reconstruction")]
    IllConditioned,

    #[error("lattice basis is linearly dependent")]
    DependentBasis,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint {path} does not match this run: {msg}")]
    Checkpoint { path: PathBuf, msg: String },

    #[error("sieve would take about {projected_secs:.0} s, over the limit of {limit_secs} s")]
    TimeBudget { projected_secs: f64, limit_secs: u64 },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotMonogenic(_) | Error::Reducible(_) => 2,
            Error::Precision(_) => 4,
            Error::Parse { .. }
            | Error::Arity { .. }
            | Error::FieldMismatch { .. }
            | Error::NormCheck { .. }
            | Error::RankDeficient(_)
            | Error::SievePrecondition(_)
            | Error::NoRegularTriples(_)
            | Error::Checkpoint { .. }
            | Error::Json { .. }
            | Error::Io { .. } => 3,
            _ => 1,
        }
    }
}
