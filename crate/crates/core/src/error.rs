use thiserror::Error;

use crate::expr::ParseError;

/// Every failure the library can report.
///
/// Variants map one-to-one onto the CLI exit-code contract through
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("positivity violation: {0}")]
    Positivity(String),

    #[error("invalid margin: eps = {eps} must satisfy 0 < eps < m/2 = {half_m}")]
    InvalidMargin { eps: f64, half_m: f64 },

    #[error("data inconsistency: {0}")]
    DataInconsistency(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("margin search failed: {0}")]
    MarginSearch(String),

    #[error("point lies inside the guard band of a piece boundary: {0}")]
    OnRidge(String),

    #[error("rejected step: dt = {dt:e} exceeds the stability bound {limit:e}")]
    RejectedStep { dt: f64, limit: f64 },

    #[error("divergence at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 3,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 2,
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Domain(_) => "domain",
            Error::Positivity(_) => "positivity",
            Error::InvalidMargin { .. } => "invalid_margin",
            Error::DataInconsistency(_) => "data_inconsistency",
            Error::WrongRegime(_) => "wrong_regime",
            Error::UnsupportedDomain(_) => "unsupported_domain",
            Error::MarginSearch(_) => "margin_search",
            Error::OnRidge(_) => "on_ridge",
            Error::RejectedStep { .. } => "rejected_step",
            Error::Divergence { .. } => "divergence",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
