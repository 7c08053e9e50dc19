//! Numerical laboratory for the Lozi map's SRB measure.
//!
//! Dynamics run in double-double precision ([`DDReal`]) or native `f64`
//! through the [`Real`] trait; statistics are accumulated in `f64`.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundles;
pub mod ensemble;
pub mod extprec;
pub mod geometry;
pub mod lozi;
pub mod measures;
pub mod observables;
pub mod output;
pub mod polygon;
pub mod response;
pub mod segments;
pub mod stats;

pub use extprec::{DDReal, Real};
pub use geometry::{Mat2, Point2, Side, SidedPoint, Vec2};
pub use lozi::{LoziMap, LoziParams};
