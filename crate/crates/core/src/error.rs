use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has (near) zero norm")]
    ZeroColumn(usize),
    #[error("frame columns are not unit norm (diagonal entry {index} = {value})")]
    NotNormalized { index: usize, value: f64 },
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("sampling pattern is empty")]
    EmptyPattern,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is rank deficient (sigma_min / sigma_max = {0:e})")]
    RankDeficient(f64),
    #[error("problem too large for exhaustive enumeration: {0}")]
    TooLarge(String),
    #[error("kernel {0} is zero")]
    ZeroKernel(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
