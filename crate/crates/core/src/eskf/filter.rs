use nalgebra::{Matrix3, RowSVector, SMatrix, SVector};

use super::{
    symmetrize, trace_bias, trace_position, Covariance, EstimatorState, Landmark, RangeMeasurement, BASE_DIM,
    BIAS_F, BIAS_W, EXT_C, EXT_Z, FULL_DIM, POS, ROT, VEL,
};
use crate::inertial::{right_jacobian, skew, so3_exp, ImuNoiseSpec, ImuSample, Vec3};
use crate::{Error, Result};

/// Noise inputs: accelerometer, gyroscope, accelerometer bias walk, gyroscope
/// bias walk.
pub type NoiseJacobian<const N: usize> = SMatrix<f64, N, 12>;

const DEGENERATE_RANGE: f64 = 1e-6;

/// Covariance update form for range measurements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateForm {
    /// `P = (I - K H) P`, then symmetrized.
    #[default]
    Standard,
    /// `P = (I - K H) P (I - K H)^T + K R K^T`.
    Joseph,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UpdateOutcome {
    Applied { innovation: f64, innovation_var: f64 },
    /// The sensor coincides with the landmark, so the direction is undefined.
    SkippedDegenerate,
}

fn check_dim<const N: usize>() {
    assert!(N == BASE_DIM || N == FULL_DIM, "error-state dimension must be 15 or 21");
}

/// Mean propagation with bias-corrected inputs.
pub fn propagate_mean(state: &EstimatorState, sample: &ImuSample, dt: f64, gravity: &Vec3) -> EstimatorState {
    let a_b = sample.f_tilde - state.b_f;
    let w_b = sample.omega_tilde - state.b_w;
    EstimatorState {
        r: state.r + state.v * dt,
        v: state.v + (state.rot.rotate(&a_b) + gravity) * dt,
        rot: state.rot.compose(&so3_exp(&(w_b * dt))),
        ..*state
    }
}

/// Discrete error-state transition `F` and noise input `G` for one step.
pub fn transition_jacobians<const N: usize>(
    state: &EstimatorState,
    sample: &ImuSample,
    dt: f64,
) -> (Covariance<N>, NoiseJacobian<N>) {
    check_dim::<N>();
    let a_b = sample.f_tilde - state.b_f;
    let phi = (sample.omega_tilde - state.b_w) * dt;
    let r = state.rot.matrix();
    let jr = right_jacobian(&phi);
    let eye = Matrix3::identity();

    let mut f = Covariance::<N>::identity();
    f.fixed_view_mut::<3, 3>(POS, VEL).copy_from(&(eye * dt));
    f.fixed_view_mut::<3, 3>(VEL, ROT).copy_from(&(-r * skew(&a_b) * dt));
    f.fixed_view_mut::<3, 3>(VEL, BIAS_F).copy_from(&(-r * dt));
    f.fixed_view_mut::<3, 3>(ROT, ROT).copy_from(&so3_exp(&phi).matrix().transpose());
    f.fixed_view_mut::<3, 3>(ROT, BIAS_W).copy_from(&(-jr * dt));

    let mut g = NoiseJacobian::<N>::zeros();
    g.fixed_view_mut::<3, 3>(VEL, 0).copy_from(&(-r * dt));
    g.fixed_view_mut::<3, 3>(ROT, 3).copy_from(&(-jr * dt));
    g.fixed_view_mut::<3, 3>(BIAS_F, 6).copy_from(&eye);
    g.fixed_view_mut::<3, 3>(BIAS_W, 9).copy_from(&eye);
    (f, g)
}

/// Diagonal of the discrete noise covariance matching [`transition_jacobians`].
pub fn noise_diagonal(noise: &ImuNoiseSpec, dt: f64) -> SVector<f64, 12> {
    let mut q = SVector::<f64, 12>::zeros();
    let vals = [
        noise.sigma_f * noise.sigma_f,
        noise.sigma_w * noise.sigma_w,
        noise.sigma_bf * noise.sigma_bf * dt,
        noise.sigma_bw * noise.sigma_bw * dt,
    ];
    for (k, v) in vals.into_iter().enumerate() {
        q.fixed_rows_mut::<3>(3 * k).fill(v);
    }
    q
}

/// `F P F^T + G Q G^T`, symmetrized.
pub fn predict_covariance<const N: usize>(
    p: &Covariance<N>,
    f: &Covariance<N>,
    g: &NoiseJacobian<N>,
    q: &SVector<f64, 12>,
) -> Covariance<N> {
    let gq = g * SMatrix::<f64, 12, 12>::from_diagonal(q);
    symmetrize(&(f * p * f.transpose() + gq * g.transpose()))
}

/// One IMU prediction step of mean and covariance.
pub fn predict<const N: usize>(
    state: &EstimatorState,
    p: &Covariance<N>,
    sample: &ImuSample,
    dt: f64,
    noise: &ImuNoiseSpec,
) -> (EstimatorState, Covariance<N>) {
    debug_assert!(dt > 0.0);
    let (f, g) = transition_jacobians::<N>(state, sample, dt);
    let next = propagate_mean(state, sample, dt, &noise.gravity);
    (next, predict_covariance(p, &f, &g, &noise_diagonal(noise, dt)))
}

/// Predicted range and its Jacobian, or `None` when the sensor sits on the
/// landmark.
pub fn range_jacobian<const N: usize>(state: &EstimatorState, landmark: &Vec3) -> Option<(f64, RowSVector<f64, N>)> {
    check_dim::<N>();
    let d = state.sensor_position() - landmark;
    let range = d.norm();
    if range <= DEGENERATE_RANGE {
        return None;
    }
    let u = d / range;
    let mut h = RowSVector::<f64, N>::zeros();
    h.fixed_columns_mut::<3>(POS).copy_from(&u.transpose());
    if N == FULL_DIM {
        let r = state.rot.matrix();
        h.fixed_columns_mut::<3>(ROT).copy_from(&(-u.transpose() * r * skew(&state.c)));
        h.fixed_columns_mut::<3>(EXT_C).copy_from(&(u.transpose() * r));
    }
    Some((range, h))
}

/// Covariance part of a scalar update. Returns the new covariance and gain.
pub fn update_range_covariance<const N: usize>(
    p: &Covariance<N>,
    h: &RowSVector<f64, N>,
    noise_var: f64,
    form: UpdateForm,
) -> (Covariance<N>, SVector<f64, N>) {
    let ph = p * h.transpose();
    let s = (h * ph)[(0, 0)] + noise_var;
    let k = ph / s;
    let ikh = Covariance::<N>::identity() - k * h;
    let next = match form {
        UpdateForm::Standard => ikh * p,
        UpdateForm::Joseph => ikh * p * ikh.transpose() + k * k.transpose() * noise_var,
    };
    (symmetrize(&next), k)
}

/// Applies an error-state correction to the nominal state.
pub fn inject_error<const N: usize>(state: &EstimatorState, dx: &SVector<f64, N>) -> EstimatorState {
    check_dim::<N>();
    let block = |i: usize| -> Vec3 { dx.fixed_rows::<3>(i).into_owned() };
    let mut next = EstimatorState {
        r: state.r + block(POS),
        v: state.v + block(VEL),
        rot: state.rot.compose(&so3_exp(&block(ROT))),
        b_f: state.b_f + block(BIAS_F),
        b_w: state.b_w + block(BIAS_W),
        ..*state
    };
    if N == FULL_DIM {
        next.c += block(EXT_C);
        next.z = state.z.compose(&so3_exp(&block(EXT_Z)));
    }
    next
}

/// EKF update with one range measurement.
pub fn update_range<const N: usize>(
    state: &EstimatorState,
    p: &Covariance<N>,
    meas: &RangeMeasurement,
    map: &[Landmark],
    form: UpdateForm,
) -> Result<(EstimatorState, Covariance<N>, UpdateOutcome)> {
    let landmark = map
        .iter()
        .find(|l| l.id == meas.landmark_id)
        .ok_or(Error::UnknownLandmark(meas.landmark_id))?;
    if !(meas.noise_std > 0.0) || !(meas.range >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "range {} / noise std {} out of domain",
            meas.range, meas.noise_std
        )));
    }
    let Some((predicted, h)) = range_jacobian::<N>(state, &landmark.position) else {
        log::warn!("skipping range update at t={}: sensor at landmark {}", meas.t, landmark.id);
        return Ok((*state, *p, UpdateOutcome::SkippedDegenerate));
    };
    let noise_var = meas.noise_std * meas.noise_std;
    let innovation_var = (h * p * h.transpose())[(0, 0)] + noise_var;
    let innovation = meas.range - predicted;
    let (next_p, k) = update_range_covariance(p, &h, noise_var, form);
    let next = inject_error(state, &(k * innovation));
    Ok((next, next_p, UpdateOutcome::Applied { innovation, innovation_var }))
}

/// Filter instance owning its state, covariance and noise model.
#[derive(Clone, Debug)]
pub struct Eskf<const N: usize = BASE_DIM> {
    pub state: EstimatorState,
    pub p: Covariance<N>,
    pub noise: ImuNoiseSpec,
    pub form: UpdateForm,
}

impl<const N: usize> Eskf<N> {
    pub fn new(state: EstimatorState, p: Covariance<N>, noise: ImuNoiseSpec) -> Self {
        check_dim::<N>();
        Self {
            state,
            p,
            noise,
            form: UpdateForm::Standard,
        }
    }

    pub fn predict(&mut self, sample: &ImuSample, dt: f64) {
        let (s, p) = predict(&self.state, &self.p, sample, dt, &self.noise);
        self.state = s;
        self.p = p;
    }

    pub fn update_range(&mut self, meas: &RangeMeasurement, map: &[Landmark]) -> Result<UpdateOutcome> {
        let (s, p, outcome) = update_range(&self.state, &self.p, meas, map, self.form)?;
        self.state = s;
        self.p = p;
        Ok(outcome)
    }

    pub fn trace_bias(&self) -> f64 {
        trace_bias(&self.p)
    }

    pub fn trace_position(&self) -> f64 {
        trace_position(&self.p)
    }
}
