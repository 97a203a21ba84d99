//! Planning and simulation for a dual-arm bin-picking robot.
//!
//! The crate covers the scene-analysis and coordination side of a
//! warehouse picking system:
//!
//! - [`geometry`]: polygon, segment and depth-map kernels
//! - [`clutter`]: occlusion graph construction and resolution to a DAG
//! - [`grasping`]: grasp point heuristics and weight verification
//! - [`placement`]: bounding-box stacking inside shipping boxes
//! - [`coordination`]: pick and stow planners for two arms
//! - [`sim`]: a deterministic discrete-event simulator of whole episodes
//!
//! Units are millimeters, grams and seconds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clutter;
pub mod coordination;
pub mod error;
pub mod geometry;
pub mod grasping;
pub mod model;
pub mod placement;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
