//! Path planning for long vehicles in a road-aligned frame.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod corridor;
pub mod distortion;
pub mod frenet;
pub mod numfmt;
pub mod oracle;
pub mod planner;
pub mod qp;
pub mod vehicle;
