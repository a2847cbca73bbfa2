//! Informative path planning for IMU bias convergence.
//!
//! The crate is organised bottom-up:
//!
//! * [`inertial`] holds rotation math, IMU measurement synthesis and the
//!   strapdown kinematics used to propagate ground truth.
//! * [`gp`] is Gaussian-process regression over time with derivative
//!   observations. Differentiation is applied to the squared-exponential kernel
//!   so position, velocity and acceleration are inferred jointly, which is what
//!   the planner uses to connect waypoints with smooth trajectories.
//! * [`eskf`] is an error-state Kalman filter with range-to-landmark updates
//!   and covariance forecasting along candidate trajectories.
//! * [`planner`] scores edges with the adaptive-trace utility and grows either
//!   an RRT* tree or a greedy chain.
//! * [`minsnap`] is the minimum-snap polynomial baseline.
//! * [`sim`] runs seeded Monte Carlo experiments and writes CSV output.

pub mod error;
pub mod eskf;
pub mod gp;
pub mod inertial;
pub mod minsnap;
pub mod planner;
pub mod sim;

pub use error::{Error, Result};
