//! Reactive navigation among moving and deforming obstacles, short-horizon
//! motion prediction, sonar-array learning and UAV coverage planning.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod kinematics;
pub mod predictor;
pub mod planner2d;
pub mod planner3d;
pub mod amaps;
pub mod bpnn;
pub mod coverage;
pub mod sim;
