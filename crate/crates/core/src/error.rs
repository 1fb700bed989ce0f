use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("density is negative ({value}) at ({x}, {y})")]
    NegativeDensity { x: f64, y: f64, value: f64 },

    #[error("density has zero total mass on the grid")]
    ZeroMass,

    #[error("invalid target set: {0}")]
    InvalidTargets(String),

    #[error("index {index} out of range (valid: {lo}..={hi})")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("unsupported cost for this operation: {0}")]
    UnsupportedCost(&'static str),

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("matrix is rank deficient beyond the gauge direction (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("no sign change on bracket [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
