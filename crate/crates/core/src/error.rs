//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mean-reversion speed must be positive (beta = {beta}, beta_q = {beta_q})")]
    NonPositiveSpeed { beta: f64, beta_q: f64 },

    #[error("volatility of volatility must be positive (sigma_x = {0})")]
    NonPositiveVolOfVol(f64),

    #[error("correlation rho_dx = {0} is outside [-1, 1]")]
    CorrelationOutOfRange(f64),

    #[error("gamma = 0 requires r > alpha (r = {r}, alpha = {alpha})")]
    GammaZeroRequiresRGreaterAlpha { r: f64, alpha: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("no admissible price-dividend ratio: {0}")]
    NoSolution(String),

    #[error("dividend-volatility square root has negative argument {arg:e} at x = {x}")]
    SqrtDomainViolation { x: f64, arg: f64 },

    #[error("mesh refinement exhausted after {nodes} nodes (residual {residual:e})")]
    MeshRefinementExhausted { nodes: usize, residual: f64 },

    #[error("quantity is undefined at x = 0")]
    UndefinedAtZero,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("infeasible parameter point: {0}")]
    InfeasiblePoint(String),

    #[error("optimizer stopped after {0} iterations without converging")]
    MaxIterations(usize),

    #[error("every evaluated point was infeasible")]
    AllPointsInfeasible,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, printed by the command line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonPositiveSpeed { .. } => "NonPositiveSpeed",
            Error::NonPositiveVolOfVol(_) => "NonPositiveVolOfVol",
            Error::CorrelationOutOfRange(_) => "CorrelationOutOfRange",
            Error::GammaZeroRequiresRGreaterAlpha { .. } => "GammaZeroRequiresRGreaterAlpha",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::NoSolution(_) => "NoSolution",
            Error::SqrtDomainViolation { .. } => "SqrtDomainViolation",
            Error::MeshRefinementExhausted { .. } => "MeshRefinementExhausted",
            Error::UndefinedAtZero => "UndefinedAtZero",
            Error::InsufficientData(_) => "InsufficientData",
            Error::ParseError { .. } => "ParseError",
            Error::MissingColumn(_) => "MissingColumn",
            Error::InfeasiblePoint(_) => "InfeasiblePoint",
            Error::MaxIterations(_) => "MaxIterations",
            Error::AllPointsInfeasible => "AllPointsInfeasible",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::ParseError {
            line,
            message: e.to_string(),
        }
    }
}
