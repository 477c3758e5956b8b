use std::path::PathBuf;

use thiserror::Error;

use crate::resampling::SeedTuple;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("degenerate ensemble: at least 2 estimates required, got {0}")]
    DegenerateEnsemble(usize),
    #[error("quality vector mismatch: {0}")]
    QualityMismatch(String),
    #[error("zero-width truth in dimension {0}")]
    ZeroWidthTruth(usize),
    #[error("zero reference component in dimension {0}")]
    ZeroReferenceComponent(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("partition exhausted: slot {slot} of size {b} needs {needed} points but n = {n}")]
    PartitionExhausted {
        slot: usize,
        b: usize,
        n: usize,
        needed: usize,
    },
    #[error("rank deficient; set λ>0")]
    RankDeficient,
    #[error("no convergence after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    NoConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },
    #[error("estimator failed on resample {seed}: {source}")]
    ResampleFailed {
        seed: SeedTuple,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
