use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("value outside the function domain: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parameters outside the supported regime: {0}")]
    Regime(String),
    #[error("no point was accepted: {0}")]
    DegenerateOutput(String),
    #[error("clause is not a threshold clause: {0}")]
    ClauseShape(String),
    #[error("access model does not fit the matrix: {0}")]
    Model(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no crossover for N in [2^{lo}, 2^{hi}]")]
    NoCrossover { lo: u32, hi: u32 },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable snake_case identifier used in machine-readable output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "degenerate_input",
            Error::Shape(_) => "shape_error",
            Error::Domain(_) => "domain_error",
            Error::Precondition(_) => "precondition_error",
            Error::Regime(_) => "regime_error",
            Error::DegenerateOutput(_) => "degenerate_output",
            Error::ClauseShape(_) => "clause_shape_error",
            Error::Model(_) => "model_error",
            Error::Numerical(_) => "numerical_error",
            Error::NoCrossover { .. } => "no_crossover",
            Error::Parse(_) => "parse_error",
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::DegenerateOutput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
