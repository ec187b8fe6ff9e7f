//! One-dimensional monotone maps, step functions and grid samples with exact
//! total-variation and log-derivative calculus.

mod grid;
mod piecewise;
mod pwl;
mod registry;
mod step;

pub use grid::{tv_of_samples, GridFunction};
pub use piecewise::{Piece, PieceFn, Piecewise, DEFAULT_RTOL};
pub(crate) use pwl::merge_breaks;
pub use pwl::{uniform_nodes, MonotonePwl};
pub use registry::{AnalyticVelocity, MapSpec, SmoothMap};
pub use step::{tv_step_difference, StepFunction};

use crate::{Error, Result, SLOPE_FLOOR};

/// `ln ψ′` of a pwl map as a step function on its breakpoints.
pub fn log_slope(psi: &MonotonePwl) -> Result<StepFunction> {
    let slopes = psi.slopes();
    let mut values = Vec::with_capacity(slopes.len());
    for (index, s) in slopes.into_iter().enumerate() {
        if !(s > SLOPE_FLOOR) {
            return Err(Error::NonPositiveSlope { index, slope: s });
        }
        values.push(s.ln());
    }
    StepFunction::new(psi.xs().to_vec(), values)
}

/// Exact composition `psi1 ∘ psi2`.
pub fn compose(psi1: &MonotonePwl, psi2: &MonotonePwl) -> Result<MonotonePwl> {
    psi1.compose(psi2)
}
