use thiserror::Error;

/// Errors raised by the library. Simulation budget overruns are not errors:
/// they surface as aborted outcomes so estimators can account for them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no admissible q0: {0}")]
    NoSolution(String),
    #[error("sampled value exceeds cap {cap}")]
    CapExceeded { cap: u64 },
    #[error("fixed-point iteration did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },
    #[error("product truncation exceeded {budget} factors (remainder {remainder:e})")]
    TruncationBudgetExceeded { budget: usize, remainder: f64 },
    #[error("extraction radius {radius} ill-conditioned for {n_points} coefficients")]
    RadiusIllConditioned { radius: f64, n_points: usize },
    #[error("extracted coefficient {value:e} at index {index} is below the noise floor {floor:e}")]
    NegativeCoefficient { index: usize, value: f64, floor: f64 },
    #[error("index {x} out of range for a series of {n_points} coefficients")]
    OutOfRange { x: i64, n_points: usize },
    #[error("infeasible window: {0}")]
    InfeasibleWindow(String),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("contour inversion failed to converge (error estimate {error:e})")]
    QuadratureFailure { error: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid_model",
            Error::NoSolution(_) => "no_solution",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::NonConvergence { .. } => "non_convergence",
            Error::TruncationBudgetExceeded { .. } => "truncation_budget_exceeded",
            Error::RadiusIllConditioned { .. } => "radius_ill_conditioned",
            Error::NegativeCoefficient { .. } => "negative_coefficient",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InfeasibleWindow(_) => "infeasible_window",
            Error::DegenerateGrid(_) => "degenerate_grid",
            Error::Unsupported(_) => "unsupported",
            Error::QuadratureFailure { .. } => "quadrature_failure",
        }
    }
}
