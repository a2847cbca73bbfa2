use serde::{Deserialize, Serialize};

use super::kernel::{DerivativeOrder, KernelParams};
use super::regression::{GpObservation, GramFactor};
use crate::inertial::{right_jacobian, right_jacobian_inv, so3_exp, so3_log, Rotation, Vec3};
use crate::{Error, Result};

/// Noise variance placed on boundary observations instead of hard
/// constraints.
pub const DEFAULT_BOUNDARY_NOISE: f64 = 1e-10;
/// Segments whose relative rotation angle reaches `pi - 0.01` are rejected:
/// the rotation-vector chart becomes ambiguous there.
pub const CHART_LIMIT: f64 = std::f64::consts::PI - 0.01;
const MIN_DURATION: f64 = 0.5;

/// Boundary conditions of one trajectory segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentSpec {
    pub start_position: Vec3,
    pub end_position: Vec3,
    pub start_velocity: Vec3,
    pub end_velocity: Vec3,
    pub start_acceleration: Vec3,
    pub end_acceleration: Vec3,
    pub start_orientation: Rotation,
    pub end_orientation: Rotation,
    /// IMU-frame angular velocity.
    pub start_angular_velocity: Vec3,
    pub end_angular_velocity: Vec3,
    pub duration: f64,
    pub sample_rate: f64,
}

impl SegmentSpec {
    /// Both endpoints at rest: zero velocity, acceleration and angular rate.
    pub fn rest_to_rest(
        start_position: Vec3,
        start_orientation: Rotation,
        end_position: Vec3,
        end_orientation: Rotation,
        duration: f64,
        sample_rate: f64,
    ) -> Self {
        Self {
            start_position,
            end_position,
            start_velocity: Vec3::zeros(),
            end_velocity: Vec3::zeros(),
            start_acceleration: Vec3::zeros(),
            end_acceleration: Vec3::zeros(),
            start_orientation,
            end_orientation,
            start_angular_velocity: Vec3::zeros(),
            end_angular_velocity: Vec3::zeros(),
            duration,
            sample_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("segment duration {} must be > 0", self.duration)));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample rate {} must be > 0", self.sample_rate)));
        }
        Ok(())
    }

    /// Sample times `k / rate`, with the last one pinned to `duration`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = ((self.duration * self.sample_rate).round() as usize).max(1);
        let mut times: Vec<f64> = (0..n).map(|k| k as f64 / self.sample_rate).collect();
        times.push(self.duration);
        times
    }

    /// Rotation vector of `start^-1 * end`, rejected near a half turn.
    pub fn relative_rotation(&self) -> Result<Vec3> {
        let phi = so3_log(&self.start_orientation.transpose().compose(&self.end_orientation));
        let angle = phi.norm();
        if angle >= CHART_LIMIT {
            return Err(Error::ChartSingular { angle });
        }
        Ok(phi)
    }
}

/// One time-stamped state along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub orientation: Rotation,
    /// IMU-frame angular velocity.
    pub angular_velocity: Vec3,
}

impl TrajectorySample {
    pub fn at_rest(t: f64, position: Vec3, orientation: Rotation) -> Self {
        Self {
            t,
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            orientation,
            angular_velocity: Vec3::zeros(),
        }
    }
}

/// Densely sampled trajectory. Timestamps are strictly increasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectorySegment {
    samples: Vec<TrajectorySample>,
}

impl TrajectorySegment {
    pub fn new(samples: Vec<TrajectorySample>) -> Self {
        debug_assert!(samples.windows(2).all(|w| w[1].t > w[0].t));
        Self { samples }
    }

    /// Holds a pose for `duration` seconds.
    pub fn stationary(position: Vec3, orientation: Rotation, duration: f64, sample_rate: f64) -> Self {
        let spec = SegmentSpec::rest_to_rest(position, orientation, position, orientation, duration, sample_rate);
        Self::new(
            spec.sample_times()
                .into_iter()
                .map(|t| TrajectorySample::at_rest(t, position, orientation))
                .collect(),
        )
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&TrajectorySample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Appends `next`, shifted to start where `self` ends. The first sample of
    /// `next` duplicates the junction and is dropped.
    pub fn append(&mut self, next: &TrajectorySegment) {
        let Some(first) = next.first() else { return };
        let Some(last) = self.samples.last() else {
            self.samples.extend_from_slice(&next.samples);
            return;
        };
        let offset = last.t - first.t;
        self.samples.extend(next.samples.iter().skip(1).map(|s| TrajectorySample {
            t: s.t + offset,
            ..*s
        }));
    }
}

/// Hyperparameter policy for segment interpolation: the lengthscale follows
/// the segment duration so conditioning is stable across durations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpSettings {
    pub signal_variance: f64,
    /// `lengthscale = duration / lengthscale_divisor`.
    pub lengthscale_divisor: f64,
    pub jitter: f64,
    pub boundary_noise: f64,
}

impl Default for GpSettings {
    fn default() -> Self {
        Self {
            signal_variance: 1.0,
            lengthscale_divisor: 3.0,
            jitter: 0.0,
            boundary_noise: DEFAULT_BOUNDARY_NOISE,
        }
    }
}

impl GpSettings {
    pub fn kernel_for(&self, duration: f64) -> KernelParams {
        KernelParams {
            signal_variance: self.signal_variance,
            lengthscale: duration / self.lengthscale_divisor,
            jitter: self.jitter,
        }
    }

    pub fn interpolate(&self, spec: &SegmentSpec) -> Result<TrajectorySegment> {
        spec.validate()?;
        interpolate_segment_with_noise(spec, &self.kernel_for(spec.duration), self.boundary_noise)
    }
}

/// GP interpolation with the default boundary noise.
pub fn interpolate_segment(spec: &SegmentSpec, params: &KernelParams) -> Result<TrajectorySegment> {
    interpolate_segment_with_noise(spec, params, DEFAULT_BOUNDARY_NOISE)
}

/// Interpolates a segment between its boundary conditions.
///
/// Each linear axis is a zero-mean GP conditioned on position, velocity and
/// acceleration at both ends; velocity and acceleration along the segment are
/// read from the derivative channels of the same posterior. Orientation is
/// expressed as the rotation vector `phi(t)` of `R_start^-1 R(t)`, each
/// component conditioned on its value and rate at both ends, and the
/// IMU-frame angular velocity is `J_r(phi) phi'`.
pub fn interpolate_segment_with_noise(
    spec: &SegmentSpec,
    params: &KernelParams,
    boundary_noise: f64,
) -> Result<TrajectorySegment> {
    spec.validate()?;
    let phi_end = spec.relative_rotation()?;
    let duration = spec.duration;
    use DerivativeOrder::*;

    let obs = |t, order| GpObservation::new(t, order, 0.0, boundary_noise);
    let linear_layout = [
        obs(0.0, Position),
        obs(0.0, Velocity),
        obs(0.0, Acceleration),
        obs(duration, Position),
        obs(duration, Velocity),
        obs(duration, Acceleration),
    ];
    let angular_layout = [
        obs(0.0, Position),
        obs(0.0, Velocity),
        obs(duration, Position),
        obs(duration, Velocity),
    ];
    let linear = GramFactor::new(&linear_layout, params)?;
    let angular = GramFactor::new(&angular_layout, params)?;

    let rate_start = spec.start_angular_velocity;
    let rate_end = right_jacobian_inv(&phi_end) * spec.end_angular_velocity;

    let linear_weights: Vec<_> = (0..3)
        .map(|i| {
            linear.weights(&[
                spec.start_position[i],
                spec.start_velocity[i],
                spec.start_acceleration[i],
                spec.end_position[i],
                spec.end_velocity[i],
                spec.end_acceleration[i],
            ])
        })
        .collect();
    let angular_weights: Vec<_> = (0..3)
        .map(|i| angular.weights(&[0.0, rate_start[i], phi_end[i], rate_end[i]]))
        .collect();

    let eval = |factor: &GramFactor, weights: &[nalgebra::DVector<f64>], t: f64, order| {
        Vec3::new(
            factor.mean(&weights[0], t, order),
            factor.mean(&weights[1], t, order),
            factor.mean(&weights[2], t, order),
        )
    };

    let samples = spec
        .sample_times()
        .into_iter()
        .map(|t| {
            let phi = eval(&angular, &angular_weights, t, Position);
            let phi_dot = eval(&angular, &angular_weights, t, Velocity);
            TrajectorySample {
                t,
                position: eval(&linear, &linear_weights, t, Position),
                velocity: eval(&linear, &linear_weights, t, Velocity),
                acceleration: eval(&linear, &linear_weights, t, Acceleration),
                orientation: spec.start_orientation.compose(&so3_exp(&phi)),
                angular_velocity: right_jacobian(&phi) * phi_dot,
            }
        })
        .collect();
    Ok(TrajectorySegment::new(samples))
}

/// Duration for moving between two positions:
/// `max(1.5 d / v_max, 2 sqrt(d / a_max), 0.5 s)`.
pub fn segment_duration_heuristic(start: &Vec3, end: &Vec3, v_max: f64, a_max: f64) -> f64 {
    debug_assert!(v_max > 0.0 && a_max > 0.0);
    let dist = (end - start).norm();
    (dist / v_max * 1.5).max((dist / a_max).sqrt() * 2.0).max(MIN_DURATION)
}
