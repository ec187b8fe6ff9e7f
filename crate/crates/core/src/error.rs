use thiserror::Error;

/// Errors raised by the flowdepth library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive slope {slope:e} on segment {index} (map is not in the reachable class)")]
    NonPositiveSlope { index: usize, slope: f64 },

    #[error("zero-width segment at breakpoint {index}")]
    DegenerateSegment { index: usize },

    #[error("invalid piecewise-linear map: {0}")]
    InvalidPwl(String),

    #[error("velocity violates zero boundary values: u(0) = {left:e}, u(1) = {right:e}")]
    BoundaryViolation { left: f64, right: f64 },

    #[error("samples are not strictly increasing at index {index}")]
    NonMonotoneSamples { index: usize },

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("flow map lost monotonicity at node {index}")]
    MonotonicityViolation { index: usize },

    #[error("schedule needs time {total:.6} but the budget is {budget:.6}")]
    BudgetExceeded { total: f64, budget: f64 },

    #[error("lift configuration violated: {0}")]
    ConfigViolation(String),

    #[error("kernel coefficient for mode {0} vanishes; choose another beta")]
    ZeroDivisor(usize),

    #[error("circle map is not invertible on the grid")]
    NonInvertible,

    #[error("derivative ratio is non-positive ({0:e})")]
    NonPositiveRho(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown builtin '{0}'")]
    UnknownBuiltin(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
