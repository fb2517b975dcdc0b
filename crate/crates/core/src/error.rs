use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("unsupported degeneracy: m_tau = {m_tau} (requires m_tau < 2)")]
    UnsupportedDegeneracy { m_tau: f64 },

    #[error("eta is singular at xi = 0 for alpha_frac = {alpha_frac} < 1/2")]
    EtaSingular { alpha_frac: f64 },

    #[error("argument {arg} lies on the branch cut of {what}")]
    BranchCut { what: &'static str, arg: Complex64 },

    #[error(
        "quadrature certification failed: worst relative error {worst_error:.3e} at lambda = {worst_lambda} (tolerance {tolerance:.1e})"
    )]
    Certification {
        worst_lambda: f64,
        worst_error: f64,
        tolerance: f64,
    },

    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("linear solve broke down at step {step}: zero pivot in row {row}")]
    SolveBreakdown { step: usize, row: usize },

    #[error("non-finite value in state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("decay fit rejected: {reason}")]
    FitWindow { reason: String },

    #[error("root refinement from seed {seed} failed: last iterate {last}, |f| = {residual:.3e}")]
    RootLoss {
        seed: Complex64,
        last: Complex64,
        residual: f64,
    },

    #[error("{what} is not supported: {reason}")]
    Unsupported { what: &'static str, reason: String },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("config parse error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::UnsupportedDegeneracy { .. } => "unsupported_degeneracy",
            Error::EtaSingular { .. } => "eta_singular",
            Error::BranchCut { .. } => "branch_cut",
            Error::Certification { .. } => "certification",
            Error::Shape { .. } => "shape",
            Error::SolveBreakdown { .. } => "solve_breakdown",
            Error::NonFinite { .. } => "non_finite",
            Error::FitWindow { .. } => "fit_window",
            Error::RootLoss { .. } => "root_loss",
            Error::Unsupported { .. } => "unsupported",
            Error::Eigen(_) => "eigen",
            Error::Io(_) => "io",
            Error::Config(_) => "config",
        }
    }
}
