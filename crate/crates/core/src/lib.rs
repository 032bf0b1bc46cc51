// Negated comparisons are used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arak;
pub mod contour;
pub mod contour_bd;
pub mod disagreement;
pub mod error;
pub mod geometry;
pub mod gibbs;
pub mod graphical;
pub mod harness;
pub mod metropolis;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
