use serde::{Deserialize, Serialize};

use super::filter::{noise_diagonal, predict_covariance, range_jacobian, transition_jacobians, update_range_covariance};
use super::{Covariance, EstimatorState, Landmark, UpdateForm};
use crate::gp::{TrajectorySample, TrajectorySegment};
use crate::inertial::{ImuNoiseSpec, ImuSample};
use crate::{Error, Result};

/// Sensor suite assumed by the filter and by forecasts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub imu: ImuNoiseSpec,
    pub imu_rate: f64,
    pub range_rate: f64,
    pub range_noise: f64,
    /// Landmarks farther than this are not measured. `None` means unlimited.
    pub max_range: Option<f64>,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            imu: ImuNoiseSpec::default(),
            imu_rate: 200.0,
            range_rate: 20.0,
            range_noise: 0.02,
            max_range: None,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        self.imu.validate()?;
        for (name, v) in [
            ("imu_rate", self.imu_rate),
            ("range_rate", self.range_rate),
            ("range_noise", self.range_noise),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if let Some(m) = self.max_range {
            if !(m > 0.0) {
                return Err(Error::InvalidParameter(format!("max_range must be > 0, got {m}")));
            }
        }
        Ok(())
    }

    pub fn in_range(&self, range: f64) -> bool {
        self.max_range.is_none_or(|m| range <= m)
    }
}

fn nominal_at(state: &EstimatorState, s: &TrajectorySample) -> EstimatorState {
    EstimatorState {
        r: s.position,
        v: s.velocity,
        rot: s.orientation,
        ..*state
    }
}

/// Expected IMU reading along a trajectory sample, biased by the current
/// estimates so bias-corrected inputs equal the planned motion.
fn expected_imu(state: &EstimatorState, s: &TrajectorySample, noise: &ImuNoiseSpec) -> ImuSample {
    ImuSample {
        t: s.t,
        f_tilde: s.orientation.inverse_rotate(&(s.acceleration - noise.gravity)) + state.b_f,
        omega_tilde: s.angular_velocity + state.b_w,
    }
}

/// Covariance after following `segment` from covariance `p`.
///
/// The nominal trajectory is the segment itself, with the biases held at the
/// estimates in `state`. Prediction runs at the segment's sample spacing with
/// the IMU white noise aggregated over the IMU samples in each step. Expected
/// range measurements to every landmark in range are fused whenever a range
/// epoch elapses; several epochs inside one step are fused as one update with
/// proportionally reduced noise. No random numbers are drawn.
pub fn forecast_covariance<const N: usize>(
    state: &EstimatorState,
    p: &Covariance<N>,
    segment: &TrajectorySegment,
    map: &[Landmark],
    sensors: &SensorModel,
) -> Covariance<N> {
    let samples = segment.samples();
    let mut p = *p;
    let range_period = 1.0 / sensors.range_rate;
    let range_var = sensors.range_noise * sensors.range_noise;
    let mut range_clock = 0.0;
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        let x = nominal_at(state, &w[0]);
        let (f, g) = transition_jacobians::<N>(&x, &expected_imu(state, &w[0], &sensors.imu), dt);
        let mut q = noise_diagonal(&sensors.imu, dt);
        let aggregate = 1.0 / (sensors.imu_rate * dt);
        q.fixed_rows_mut::<6>(0).scale_mut(aggregate);
        p = predict_covariance(&p, &f, &g, &q);

        range_clock += dt;
        let epochs = (range_clock / range_period + 1e-9).floor();
        if epochs >= 1.0 {
            range_clock -= epochs * range_period;
            let x = nominal_at(state, &w[1]);
            for l in map {
                if let Some((range, h)) = range_jacobian::<N>(&x, &l.position) {
                    if sensors.in_range(range) {
                        p = update_range_covariance(&p, &h, range_var / epochs, UpdateForm::Standard).0;
                    }
                }
            }
        }
    }
    p
}
