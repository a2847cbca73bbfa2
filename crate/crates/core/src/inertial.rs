//! Rigid-body math, IMU measurement synthesis and strapdown kinematics.
//!
//! Attitude convention: a [`Rotation`] `R` is the attitude of the IMU frame
//! with respect to the world frame `W`. World-frame vectors are obtained from
//! IMU-frame vectors as `R * v_imu`, and `R^T` maps world vectors into the IMU
//! frame. The accelerometer model is therefore `f~ = R^T (f_W - g) + b_f + n`
//! and attitude kinematics are `R' = R [w]x`.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Below this rotation angle the exponential and logarithm maps switch to
/// their Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-8;
/// Per-element tolerance for `R^T R = I` and `det R = 1`.
pub const ROTATION_TOL: f64 = 1e-9;

const NEAR_PI: f64 = 1e-4;

/// Element of SO(3) stored as a 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates orthonormality and handedness before wrapping `m`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let gram = m.transpose() * m - Matrix3::identity();
        let worst = gram.amax();
        if worst > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!(
                "R^T R deviates from identity by {worst:e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!("determinant {det}")));
        }
        Ok(Rotation(m))
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Rotation(*q.to_rotation_matrix().matrix())
    }

    /// `(w, x, y, z)` with `w >= 0`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.0);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// `self * other`.
    pub fn compose(&self, other: &Rotation) -> Self {
        Rotation(self.0 * other.0)
    }

    /// Maps an IMU-frame vector into the world frame.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Maps a world-frame vector into the IMU frame.
    pub fn inverse_rotate(&self, v: &Vec3) -> Vec3 {
        self.0.transpose() * v
    }

    /// Geodesic angle between two rotations.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        so3_log(&self.transpose().compose(other)).norm()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.0.transpose() * self.0 - Matrix3::identity();
        gram.amax() <= tol && (self.0.determinant() - 1.0).abs() <= tol
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

/// Cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee(m: &Matrix3<f64>) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues' formula.
pub fn so3_exp(phi: &Vec3) -> Rotation {
    let theta = phi.norm();
    let k = skew(phi);
    let k2 = k * k;
    let m = if theta < SMALL_ANGLE {
        Matrix3::identity() + k + 0.5 * k2
    } else {
        let a = theta.sin() / theta;
        let b = (1.0 - theta.cos()) / (theta * theta);
        Matrix3::identity() + a * k + b * k2
    };
    Rotation(m)
}

/// Rotation vector of `r`, with norm in `[0, pi]`.
///
/// At an angle of exactly pi the axis sign is ambiguous; the returned axis
/// then has a positive component along its dominant coordinate, so a half
/// turn about `+z` or `-z` both map to `(0, 0, pi)`.
pub fn so3_log(r: &Rotation) -> Vec3 {
    let m = r.matrix();
    let cos_theta = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let anti = vee(&(m - m.transpose())) * 0.5; // sin(theta) * axis

    if theta < SMALL_ANGLE {
        return anti;
    }
    if std::f64::consts::PI - theta > NEAR_PI {
        return anti * (theta / theta.sin());
    }

    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part (1 - cos) a a^T + cos I instead.
    let sym = (m + m.transpose()) * 0.5;
    let aat = (sym - Matrix3::identity() * cos_theta) / (1.0 - cos_theta);
    let (mut best, mut best_val) = (0, aat[(0, 0)]);
    for i in 1..3 {
        if aat[(i, i)] > best_val {
            best = i;
            best_val = aat[(i, i)];
        }
    }
    let mut axis: Vec3 = aat.column(best).into_owned() / best_val.max(0.0).sqrt();
    axis.normalize_mut();
    let flip = if anti.norm() > 1e-12 {
        axis.dot(&anti) < 0.0
    } else {
        axis[best] < 0.0
    };
    if flip {
        axis = -axis;
    }
    axis * theta
}

/// Logarithm of an arbitrary matrix, validating it first.
pub fn so3_log_matrix(m: &Matrix3<f64>) -> Result<Vec3> {
    Ok(so3_log(&Rotation::from_matrix(*m)?))
}

/// Right Jacobian of SO(3): `exp(phi + d) ~= exp(phi) exp(J_r(phi) d)`.
pub fn right_jacobian(phi: &Vec3) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = skew(phi);
    let k2 = k * k;
    if theta < 1e-5 {
        return Matrix3::identity() - 0.5 * k + k2 / 6.0;
    }
    let t2 = theta * theta;
    Matrix3::identity() - (1.0 - theta.cos()) / t2 * k + (theta - theta.sin()) / (t2 * theta) * k2
}

pub fn right_jacobian_inv(phi: &Vec3) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = skew(phi);
    let k2 = k * k;
    if theta < 1e-5 {
        return Matrix3::identity() + 0.5 * k + k2 / 12.0;
    }
    let c = 1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * theta.sin());
    Matrix3::identity() + 0.5 * k + c * k2
}

/// One accelerometer + gyroscope reading, both in the IMU frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub f_tilde: Vec3,
    pub omega_tilde: Vec3,
}

/// IMU noise model.
///
/// `sigma_f` / `sigma_w` are per-sample white-noise standard deviations at the
/// IMU rate; `sigma_bf` / `sigma_bw` are random-walk intensities in units per
/// square-root second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImuNoiseSpec {
    pub sigma_f: f64,
    pub sigma_w: f64,
    pub sigma_bf: f64,
    pub sigma_bw: f64,
    pub gravity: Vec3,
}

impl Default for ImuNoiseSpec {
    fn default() -> Self {
        Self {
            sigma_f: 0.0196,
            sigma_w: 0.0017,
            sigma_bf: 2e-4,
            sigma_bw: 2e-5,
            gravity: Vec3::new(0.0, 0.0, -9.81),
        }
    }
}

impl ImuNoiseSpec {
    pub fn noiseless(gravity: Vec3) -> Self {
        Self {
            sigma_f: 0.0,
            sigma_w: 0.0,
            sigma_bf: 0.0,
            sigma_bw: 0.0,
            gravity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [self.sigma_f, self.sigma_w, self.sigma_bf, self.sigma_bw];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParameter(
                "noise standard deviations must be finite and >= 0".into(),
            ));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidParameter("gravity must be finite".into()));
        }
        Ok(())
    }
}

/// Ground-truth kinematic state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrueState {
    pub r: Vec3,
    pub v: Vec3,
    pub rot: Rotation,
    pub b_f: Vec3,
    pub b_w: Vec3,
}

impl TrueState {
    pub fn at_rest(r: Vec3, rot: Rotation) -> Self {
        Self {
            r,
            v: Vec3::zeros(),
            rot,
            b_f: Vec3::zeros(),
            b_w: Vec3::zeros(),
        }
    }
}

pub(crate) fn gaussian3<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vec3 {
    // Always draw, even for sigma == 0, so paired runs consume identical streams.
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vec3::new(x, y, z) * sigma
}

/// Accelerometer and gyroscope readings for the true state, given the
/// world-frame acceleration `f_world` and the IMU-frame angular rate.
pub fn synthesize_imu<R: Rng + ?Sized>(
    t: f64,
    truth: &TrueState,
    f_world: &Vec3,
    omega_body: &Vec3,
    noise: &ImuNoiseSpec,
    rng: &mut R,
) -> ImuSample {
    let eta_f = gaussian3(rng, noise.sigma_f);
    let eta_w = gaussian3(rng, noise.sigma_w);
    ImuSample {
        t,
        f_tilde: truth.rot.inverse_rotate(&(f_world - noise.gravity)) + truth.b_f + eta_f,
        omega_tilde: omega_body + truth.b_w + eta_w,
    }
}

/// Advances the true state by `dt` with first-order Euler.
///
/// Attitude and velocity use the pre-step attitude, and position uses the
/// pre-step velocity. Biases random-walk with standard deviation
/// `sigma_b * sqrt(dt)`.
pub fn integrate_kinematics<R: Rng + ?Sized>(
    truth: &TrueState,
    sample: &ImuSample,
    noise: &ImuNoiseSpec,
    dt: f64,
    rng: &mut R,
) -> TrueState {
    debug_assert!(dt > 0.0);
    let w = sample.omega_tilde - truth.b_w;
    let f = sample.f_tilde - truth.b_f;
    let sqrt_dt = dt.sqrt();
    TrueState {
        r: truth.r + truth.v * dt,
        v: truth.v + (truth.rot.rotate(&f) + noise.gravity) * dt,
        rot: truth.rot.compose(&so3_exp(&(w * dt))),
        b_f: truth.b_f + gaussian3(rng, noise.sigma_bf * sqrt_dt),
        b_w: truth.b_w + gaussian3(rng, noise.sigma_bw * sqrt_dt),
    }
}
