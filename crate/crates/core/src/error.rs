use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model or distribution parameters.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A program or dataset could not be assembled.
    #[error("construction error: {0}")]
    Construction(String),

    /// The simplex solver failed (iteration cap, singular basis, ...).
    #[error("solver error: {0}")]
    Solver(String),

    /// A caller violated an operation contract, e.g. extracting
    /// coefficients from a non-optimal result.
    #[error("contract error: {0}")]
    Contract(String),

    /// The fallback program of the tuning search has no feasible point.
    #[error("fallback program infeasible at a = {a}")]
    FallbackInfeasible { a: f64 },

    /// The self-normalizing denominator vanished.
    #[error("degenerate statistic: denominator {denominator:e} below threshold {threshold:e}")]
    DegenerateStatistic { denominator: f64, threshold: f64 },

    /// Too many Monte Carlo replications failed.
    #[error("harness error: {0}")]
    Harness(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver(_)
                | Error::FallbackInfeasible { .. }
                | Error::DegenerateStatistic { .. }
                | Error::Harness(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
