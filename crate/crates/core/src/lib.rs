//! Minimal flow time ("idealized depth") needed to approximate diffeomorphisms
//! by flows of constrained vector-field families.
//!
//! The crate is organised by subsystem:
//!
//! * [`core1d`] – monotone piecewise-linear maps, step functions, grid samples,
//!   the builtin map registry and exact total-variation calculus.
//! * [`relu1d`] – the closed-form flow metric of the 1D ReLU family: local norm,
//!   complexity, distance, geodesics and finite-sample distances.
//! * [`l1_interp`] – the exact ℓ1-minimal shallow ReLU interpolation solver with
//!   its witness and an independent simplex oracle.
//! * [`flow`] – exact event-driven flows of piecewise-linear fields, control
//!   schedules, Euler ResNet iteration and geodesic realization.
//! * [`lift2d`] – the dimension-doubling lift/isotopy/projection construction.
//! * [`so3`] – angle metric and ℓ1 transport-time bounds on SO(3).
//! * [`circle`] – layer-normalization example on the circle.
//! * [`contour`] and [`verify`] – figure data and the invariant suite used by the CLI.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle;
pub mod contour;
pub mod core1d;
mod error;
pub mod flow;
pub mod l1_interp;
pub mod lift2d;
pub mod relu1d;
pub mod so3;
pub mod verify;

pub use core1d::{GridFunction, MapSpec, MonotonePwl, SmoothMap, StepFunction};
pub use error::{Error, Result};

/// Slopes at or below this floor are treated as non-positive.
pub const SLOPE_FLOOR: f64 = 1e-12;
