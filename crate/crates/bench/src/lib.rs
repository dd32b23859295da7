//! Benchmark harness for the sampling planner: maze and scene corpora,
//! planning campaigns, CSV reports and SVG plots.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod plot;
pub mod scenes;
