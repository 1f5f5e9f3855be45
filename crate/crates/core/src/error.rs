use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("ball contains no grid point")]
    EmptyBall,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at grid index {0}")]
    NonFinite(usize),

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("unknown Young function kind `{0}`")]
    UnknownYoung(String),

    #[error("not a Young function: {0}")]
    InvalidYoung(String),

    #[error("weight must be strictly positive and finite (index {0})")]
    InvalidWeight(usize),

    #[error("function is not supported in the core window (nonzero at grid index {0})")]
    NotTestFunction(usize),

    #[error("Hölder ratio has a vanishing right-hand side with a positive left-hand side")]
    DegenerateHolder,

    #[error("kernel table {path}: {reason}")]
    KernelTable { path: PathBuf, reason: String },

    #[error("kernel table {path}: {source}")]
    KernelTableCsv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
