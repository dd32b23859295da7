//! Heteroscedastic Gaussian-process trajectory priors, sampling, dense
//! interpolation, signed-distance collision costs, maze generation and a
//! cross-entropy style planner that refines only the prior mean.
//!
//! The typical pipeline is:
//!
//! 1. build an occupancy grid (for example with [`maze_gen::generate_maze`])
//!    and its [`environment::SignedDistanceField`];
//! 2. construct a goal-conditioned [`gp_prior::GpPrior`] between the start
//!    and goal positions;
//! 3. run [`optimizer::Planner::plan`].

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod gp_prior;
pub mod interpolation;
pub mod maze_gen;
pub mod optimizer;
pub mod sampler;
pub mod trajectory;

pub use error::{Error, Result};
pub use gp_prior::{build_prior, Anchors, GpPrior, NoiseProfile, PriorMean, TimeGrid};
pub use trajectory::{StateVector, Trajectory};
