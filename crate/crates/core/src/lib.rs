//! Synthetic projective "photo" generation, rectification and quad IoU scoring.
//!
//! A flat source image is framed (optionally) by a monitor border, warped by
//! a random projective transform, composited over a background and
//! photometrically perturbed. Each output comes with the 3×3 transform that
//! maps the source frame onto its region in the photo, so the photo can be
//! rectified by the inverse warp and predictions can be scored by region
//! overlap.

// `!(x > eps)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compositor;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod perturb;
pub mod pipeline;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{Homography, Point, Quad, QuadValidity, CANONICAL_CORNERS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
