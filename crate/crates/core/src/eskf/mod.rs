//! Error-state Kalman filter over position, velocity, orientation and IMU
//! biases, with range-to-landmark updates.
//!
//! The error state is `[dr, dv, dtheta, db_f, db_w]` (15 dimensions), or 21
//! with the extrinsic translation and rotation appended. Orientation errors are
//! right-multiplicative: `R = R_hat * exp(dtheta)`.

mod filter;
mod forecast;

pub use filter::{
    inject_error, noise_diagonal, predict, predict_covariance, propagate_mean, range_jacobian, transition_jacobians,
    update_range, update_range_covariance, Eskf, UpdateForm, UpdateOutcome,
};
pub use forecast::{forecast_covariance, SensorModel};

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use crate::inertial::{Rotation, Vec3};
use crate::{Error, Result};

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const ROT: usize = 6;
pub const BIAS_F: usize = 9;
pub const BIAS_W: usize = 12;
pub const EXT_C: usize = 15;
pub const EXT_Z: usize = 18;

/// Error-state dimension without extrinsics.
pub const BASE_DIM: usize = 15;
/// Error-state dimension with extrinsics.
pub const FULL_DIM: usize = 21;

pub type Covariance<const N: usize = BASE_DIM> = SMatrix<f64, N, N>;

/// Nominal filter state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorState {
    pub r: Vec3,
    pub v: Vec3,
    /// Maps IMU-frame vectors to the world frame.
    pub rot: Rotation,
    pub b_f: Vec3,
    pub b_w: Vec3,
    /// Exteroceptive sensor offset in the IMU frame.
    pub c: Vec3,
    pub z: Rotation,
}

impl EstimatorState {
    pub fn new(r: Vec3, v: Vec3, rot: Rotation) -> Self {
        Self {
            r,
            v,
            rot,
            b_f: Vec3::zeros(),
            b_w: Vec3::zeros(),
            c: Vec3::zeros(),
            z: Rotation::identity(),
        }
    }

    /// Position of the exteroceptive sensor in the world frame.
    pub fn sensor_position(&self) -> Vec3 {
        self.r + self.rot.rotate(&self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: u32,
    pub position: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeMeasurement {
    pub t: f64,
    pub landmark_id: u32,
    pub range: f64,
    pub noise_std: f64,
}

/// Initial standard deviations per error-state block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorStd {
    pub position: f64,
    pub velocity: f64,
    pub orientation: f64,
    pub accel_bias: f64,
    pub gyro_bias: f64,
    pub extrinsic_translation: f64,
    pub extrinsic_rotation: f64,
}

impl Default for PriorStd {
    fn default() -> Self {
        Self {
            position: 0.1,
            velocity: 0.05,
            orientation: 0.01,
            accel_bias: 0.1,
            gyro_bias: 0.01,
            extrinsic_translation: 0.0,
            extrinsic_rotation: 0.0,
        }
    }
}

impl PriorStd {
    pub fn covariance<const N: usize>(&self) -> Covariance<N> {
        assert!(N == BASE_DIM || N == FULL_DIM, "error-state dimension must be 15 or 21");
        let mut p = Covariance::<N>::zeros();
        let blocks = [
            (POS, self.position),
            (VEL, self.velocity),
            (ROT, self.orientation),
            (BIAS_F, self.accel_bias),
            (BIAS_W, self.gyro_bias),
            (EXT_C, self.extrinsic_translation),
            (EXT_Z, self.extrinsic_rotation),
        ];
        for (start, std) in blocks {
            if start + 3 <= N {
                for i in start..start + 3 {
                    p[(i, i)] = std * std;
                }
            }
        }
        p
    }
}

fn block_trace<const N: usize>(p: &Covariance<N>, start: usize, len: usize) -> f64 {
    (start..start + len).map(|i| p[(i, i)]).sum()
}

/// Trace of the accelerometer and gyroscope bias blocks together.
pub fn trace_bias<const N: usize>(p: &Covariance<N>) -> f64 {
    block_trace(p, BIAS_F, 6)
}

pub fn trace_position<const N: usize>(p: &Covariance<N>) -> f64 {
    block_trace(p, POS, 3)
}

pub fn trace_accel_bias<const N: usize>(p: &Covariance<N>) -> f64 {
    block_trace(p, BIAS_F, 3)
}

pub fn symmetrize<const N: usize>(p: &Covariance<N>) -> Covariance<N> {
    (p + p.transpose()) * 0.5
}

/// Checks that `p` is finite, symmetric within `1e-9` and PSD with
/// `min eig >= -1e-8 trace`.
pub fn validate_covariance<const N: usize>(p: &Covariance<N>) -> Result<()> {
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("covariance has non-finite entries".into()));
    }
    let asym = (p - p.transpose()).amax();
    if asym > 1e-9 {
        return Err(Error::InvalidParameter(format!("covariance asymmetry {asym:e}")));
    }
    let min_eig = min_eigenvalue(p);
    if min_eig < -1e-8 * p.trace().abs() {
        return Err(Error::InvalidParameter(format!("covariance min eigenvalue {min_eig:e}")));
    }
    Ok(())
}

pub fn min_eigenvalue<const N: usize>(p: &Covariance<N>) -> f64 {
    let d = DMatrix::from_column_slice(N, N, symmetrize(p).as_slice());
    d.symmetric_eigenvalues().min()
}
