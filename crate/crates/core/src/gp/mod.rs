//! Gaussian-process regression over time with derivative observations.
//!
//! Differentiation is a linear operator, so applying it to either argument of
//! the squared-exponential kernel gives the cross-covariances between a
//! trajectory and its derivatives. Position, velocity and acceleration
//! observations are then conditioned on jointly, and any derivative channel
//! can be queried from the same posterior.

mod kernel;
mod regression;
mod segment;

pub use kernel::{se_kernel, DerivativeOrder, KernelParams};
pub use regression::{build_gram, gp_infer, GpModel, GpObservation, GpPosterior, GramFactor};
pub use segment::{
    interpolate_segment, interpolate_segment_with_noise, segment_duration_heuristic, GpSettings,
    SegmentSpec, TrajectorySample, TrajectorySegment, CHART_LIMIT, DEFAULT_BOUNDARY_NOISE,
};
