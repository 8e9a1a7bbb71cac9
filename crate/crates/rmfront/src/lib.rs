//! Traveling fronts of the diffusive Rosenzweig-MacArthur predator-prey
//! system and their spectral stability in exponentially weighted spaces.
//!
//! The crate computes front profiles by collocation with continuation from
//! the scalar KPP limit, maps the essential spectrum of the linearization in
//! closed form, derives eigenvalue-magnitude bounds that fix a contour
//! radius, and counts point spectrum inside that contour with an Evans
//! function evaluated by exterior-power (compound-matrix) integration with a
//! polar cross-check. A scalar Fisher-KPP reduction provides an independent
//! oracle for the predator-free edge of the parameter space.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::type_complexity)]

pub mod bounds;
pub mod cli;
pub mod evans;
pub mod front;
pub mod kpp;
pub mod model;
pub mod numerics;
pub mod spectrum;
