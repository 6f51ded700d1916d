//! Ricci flow of warped Berger metrics on the product of a circle and the
//! three-sphere: geometry, time integration, initial data and diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod curvature;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod grid;
pub mod initial;
pub mod oracle;
pub mod profile;

pub use curvature::{
    base_distance, fiber_curvatures, profile_extrema, sectional_curvatures, CurvatureField,
    ProfileExtrema,
};
pub use error::{Error, Result};
pub use grid::PeriodicGrid;
pub use profile::{s_derivative, Profile};
