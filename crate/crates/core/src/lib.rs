//! Time-series econometrics for monthly macro/commodity data: descriptive
//! statistics, a unit-root battery (with structural breaks), residual- and
//! system-based cointegration tests, ARDL bounds testing with the exact
//! error-correction reparameterization, Toda-Yamamoto causality, and VAR
//! structural analysis (IRF/FEVD/historical decomposition).
//!
//! Everything is a pure function over immutable inputs; grid searches reduce
//! deterministically (ties break toward the earliest date / smallest model),
//! so identical inputs give identical results regardless of thread count.

pub mod ardl;
pub mod cointegration;
pub mod criticalvalues;
pub mod dataframe;
pub mod diagnostics;
pub mod linreg;
pub mod structural;
pub mod unitroot;
pub mod varmodel;

use thiserror::Error;

/// Crate-wide error type. Variant names track the failure contracts of the
/// individual modules; everything is `Send + Sync + 'static`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing observation: expected {0}")]
    MissingObservation(String),
    #[error("row {row}, column {column}: cannot parse {content:?}")]
    ParseError {
        row: usize,
        column: String,
        content: String,
    },
    #[error("duplicate date {0}")]
    DuplicateDate(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("domain error at index {index}: {reason}")]
    DomainError { index: usize, reason: String },
    #[error("series too short: {0}")]
    LengthError(String),
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("rank-deficient design, dependent column(s): {0:?}")]
    RankDeficient(Vec<String>),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("HAC bandwidth {bandwidth} >= sample size {n}")]
    BandwidthTooLarge { bandwidth: usize, n: usize },
    #[error("restriction covariance R V R' is singular")]
    SingularRestrictionCovariance,
    #[error("singular moment matrix in {0}")]
    SingularSystem(String),
    #[error("integration order above 2 for {0}; differencing further is unsupported")]
    ExcessIntegration(String),
    #[error("no critical-value table for {0}")]
    MissingCriticalValues(String),
    #[error("family {0} provides bands only, not p-values")]
    UnsupportedPValue(String),
    #[error("no simulator for family {0}")]
    UnsupportedFamily(String),
    #[error("long-run denominator 1 - sum(a) is numerically zero")]
    UnitRootDenominator,
    #[error("model has no lagged regressor terms to restrict")]
    NoLaggedRegressors,
    #[error("residual covariance is not positive definite")]
    DegenerateCovariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
