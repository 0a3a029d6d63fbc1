use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter struct violates its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Bracketed root-finding could not find a sign change.
    #[error("solver error: no sign change on [{lo:e}, {hi:e}] (f(lo)={f_lo:e}, f(hi)={f_hi:e})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// An iterative method hit its iteration cap.
    #[error("no convergence after {iterations} iterations (last iterate {last:e})")]
    Convergence { iterations: usize, last: f64 },

    /// The requested configuration is not covered by the routine.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Input data violate a schema or value constraint.
    #[error("data error: {0}")]
    Data(String),

    /// A generator or run configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// The design matrix is rank deficient.
    #[error("rank deficient design; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    /// Calibration equation has no admissible root.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Curvature bounds are empty.
    #[error("infeasible bounds: lower {lower} >= upper {upper}")]
    InfeasibleBounds { lower: f64, upper: f64 },

    /// The interval data contain no chatbot windows.
    #[error("no treatment windows in interval data")]
    NoTreatmentWindows,
}

pub type Result<T> = std::result::Result<T, Error>;
