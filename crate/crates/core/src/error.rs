use std::path::PathBuf;

use crate::turank::RankReport;

/// Errors produced by the tensor algebra, the decompositions and the file formats.
#[derive(Debug, thiserror::Error)]
pub enum TubalError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("inverse transform left an imaginary residual of {residual:.3e} (limit {limit:.3e}); the spectral tensor is not conjugate symmetric")]
    ImaginaryResidualTooLarge { residual: f64, limit: f64 },

    #[error("non-finite entry at linear index {0}")]
    NonFinite(usize),

    #[error("matrix factorization did not converge: {0}")]
    Convergence(&'static str),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("rank cap of {cap} reached on Fourier slice {slice} before a Ritz value fell below the threshold")]
    RankNotRevealed {
        slice: usize,
        cap: usize,
        partial: Box<RankReport>,
    },

    #[error("malformed tensor file at byte offset {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("cannot ingest {}: {msg}", path.display())]
    Ingest { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = TubalError> = std::result::Result<T, E>;
