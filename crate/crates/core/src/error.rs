use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("covariance matrix is not positive semi-definite even after jitter")]
    NotPositiveSemiDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("response has zero variance")]
    DegenerateResponse,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("treatment column must have exactly two distinct values, found {0}")]
    NotTwoArms(usize),
    #[error("dataset has no usable rows")]
    EmptyDataset,
    #[error("covariate `{0}` is constant")]
    ConstantColumn(String),
    #[error("{0} covariates is too many to enumerate (limit 20)")]
    TooManyCovariates(usize),
    #[error("covariate `{0}` is categorical with more than two levels")]
    CategoricalUnsupported(String),
    #[error("covariate `{0}` is not binary or categorical")]
    NotCategorical(String),
    #[error("unknown or invalid model: {0}")]
    InvalidModel(String),
    #[error("treatment is completely confounded with the covariates (R^2 = {r_squared})")]
    CompleteConfounding { r_squared: f64 },
    #[error("design has rank {rank} but {k} columns")]
    RankDeficient { rank: usize, k: usize },
    #[error("contingency table has an empty margin")]
    EmptyMargin,
    #[error("outside domain: {0}")]
    DomainError(String),
    #[error("{dropped} of {m} replicates dropped in cell {cell}")]
    TooManyRedraws {
        cell: String,
        dropped: usize,
        m: usize,
    },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
