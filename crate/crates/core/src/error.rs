use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree too large: {0} exceeds the recurrence bound {1}")]
    DegreeTooLarge(usize, usize),
    #[error("shift exceeds grid margin (q = {q}, p = {p})")]
    ShiftExceedsMargin { q: f64, p: f64 },
    #[error("density requires pure decomposition")]
    DensityRequiresPureDecomposition,
    #[error("base operator not regular: |tr[T W]| = {value:e} at ({q}, {p})")]
    BaseNotRegular { q: f64, p: f64, value: f64 },
    #[error("convolver support deficient — deconvolution ill-posed: {0}")]
    SupportDeficient(String),
    #[error("moment system ill-conditioned — reduce degree (condition number {0:e})")]
    IllConditioned(f64),
    #[error("no finite moments: {0}")]
    NoFiniteMoments(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
