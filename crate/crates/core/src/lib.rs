//! Dynamic weight importance sampling (DWIS) for low-cost spatiotemporal
//! sensing.
//!
//! A sensor field is queried with contour levels and a margin `Δ`, and only
//! sensors whose observation lies within `Δ` of a level reply. The fusion
//! center rebuilds the field from those replies with a biharmonic spline,
//! then refines the levels and adapts `Δ` from the slope of the
//! reconstruction error.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature switches
//! the float intrinsics from `libm` to the platform ones and turns on
//! runtime CPU detection in the matrix kernels.

#![cfg_attr(not(feature = "std"), no_std)]
// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dwis;
pub mod error;
pub mod field;
pub mod grid;
pub mod levels;
pub mod linalg;
pub mod reconstruct;
pub mod seed;
pub mod sensors;

mod math;

pub use crate::dwis::{
    delta_update, modeling_rmse, range_coverage, run, spatial_phase, temporal_phase, tracking_rmse, DwisConfig,
    IterationRecord, PilotRecord, RunResult, Scenario, SpatialOutcome,
};
pub use crate::error::{Error, Result};
pub use crate::field::{EvolveParams, Field, FieldParams, GaussianComponent};
pub use crate::grid::{Area, Grid, GridSpec};
pub use crate::levels::{ContourLevels, LevelScheme, LloydMaxOptions, LloydMaxResult, Pdf1D};
pub use crate::reconstruct::{fit_biharmonic, greens_function, IncrementalSpline, SplineModel};
pub use crate::sensors::{QueryReply, Sensor, SensorField};
