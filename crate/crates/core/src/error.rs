use chrono::NaiveDate;
use thiserror::Error;

use crate::garch::UnivariateFit;

/// Errors raised by the estimation, diagnostic and data-handling routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unparseable date `{value}` at row {row}")]
    UnparseableDate { row: usize, value: String },
    #[error("non-numeric cell `{value}` at row {row}, column `{column}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("dates are not sorted at {0}")]
    UnsortedDates(NaiveDate),
    #[error("frames share no common dates")]
    EmptyIntersection,
    #[error("asset `{0}` appears in more than one frame")]
    DuplicateAsset(String),
    #[error("non-positive price {value} for asset `{asset}` on {date}")]
    NonPositivePrice {
        asset: String,
        date: NaiveDate,
        value: f64,
    },
    #[error("non-finite value for asset `{asset}` at row {row}")]
    NonFinite { asset: String, row: usize },
    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("sample too short: need more than {needed} observations, got {got}")]
    SampleTooShort { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("too many lags: {lags} lags requested for {n} observations")]
    TooManyLags { lags: usize, n: usize },
    #[error("auxiliary regression design is rank deficient")]
    SingularRegression,
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("moving-average polynomial is not invertible")]
    NonInvertibleMa,
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    #[error("univariate fit did not converge: {status}")]
    GarchNonConvergence {
        status: String,
        best: Box<UnivariateFit>,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("correlation matrix is not positive definite at t={0}")]
    NonPositiveDefiniteR(usize),
    #[error("correlation intercept is not positive semi-definite")]
    InterceptNotPsd,
    #[error("window `{0}` contains no observations")]
    EmptyWindow(String),
    #[error("invalid window `{0}`")]
    InvalidWindow(String),
    #[error("degenerate switch-price denominator")]
    DegenerateDenominator,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid data-generating process: {0}")]
    InvalidDgp(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
