use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{se_kernel, DerivativeOrder, KernelParams};
use crate::{Error, Result};

/// Upper bound of the jitter escalation, relative to the signal variance.
const MAX_RELATIVE_JITTER: f64 = 1e-4;
/// First escalation step when the configured jitter is zero.
const MIN_RELATIVE_JITTER: f64 = 1e-12;

/// A noisy observation of position, velocity or acceleration at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpObservation {
    pub t: f64,
    pub order: DerivativeOrder,
    pub value: f64,
    pub noise_var: f64,
}

impl GpObservation {
    pub fn new(t: f64, order: DerivativeOrder, value: f64, noise_var: f64) -> Self {
        Self {
            t,
            order,
            value,
            noise_var,
        }
    }
}

/// Operator-decorated Gram matrix over the observations: entry `(i, j)` is
/// the kernel differentiated `order_i` times in its first argument and
/// `order_j` times in its second. The diagonal carries the observation noise
/// plus `jitter * signal_variance`.
pub fn build_gram(obs: &[GpObservation], p: &KernelParams) -> DMatrix<f64> {
    let n = obs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = se_kernel(obs[i].t, obs[j].t, p, obs[i].order, obs[j].order);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += obs[i].noise_var + p.jitter * p.signal_variance;
    }
    k
}

/// Cholesky factor of the joint Gram matrix for a fixed observation layout.
///
/// The layout (times, orders, noise) is separated from the observed values so
/// that several output channels sharing a layout reuse one factorisation.
#[derive(Clone, Debug)]
pub struct GramFactor {
    layout: Vec<GpObservation>,
    params: KernelParams,
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl GramFactor {
    /// Factorises the Gram matrix, escalating the relative jitter by factors
    /// of ten up to `1e-4` when the factorisation fails.
    pub fn new(layout: &[GpObservation], params: &KernelParams) -> Result<Self> {
        params.validate()?;
        if layout.is_empty() {
            return Err(Error::InvalidParameter("at least one observation is required".into()));
        }
        if layout.iter().any(|o| !(o.t.is_finite() && o.noise_var >= 0.0)) {
            return Err(Error::InvalidParameter(
                "observation times must be finite and noise variances >= 0".into(),
            ));
        }
        let base = build_gram(layout, params);
        if let Some(chol) = Cholesky::new(base.clone()) {
            return Ok(Self::assemble(layout, params, chol, params.jitter));
        }
        let mut jitter = (params.jitter * 10.0).max(MIN_RELATIVE_JITTER);
        while jitter <= MAX_RELATIVE_JITTER * (1.0 + 1e-12) {
            let extra = (jitter - params.jitter) * params.signal_variance;
            let mut k = base.clone();
            for i in 0..k.nrows() {
                k[(i, i)] += extra;
            }
            if let Some(chol) = Cholesky::new(k) {
                log::debug!("gram factorised with escalated jitter {jitter:e}");
                return Ok(Self::assemble(layout, params, chol, jitter));
            }
            jitter *= 10.0;
        }
        Err(Error::IllConditioned {
            max_jitter: MAX_RELATIVE_JITTER,
        })
    }

    fn assemble(layout: &[GpObservation], params: &KernelParams, chol: Cholesky<f64, Dyn>, jitter: f64) -> Self {
        Self {
            layout: layout.to_vec(),
            params: *params,
            chol,
            jitter,
        }
    }

    /// Relative jitter that was needed for the factorisation to succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.is_empty()
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// `K^-1 y` for one output channel.
    pub fn weights(&self, values: &[f64]) -> DVector<f64> {
        assert_eq!(values.len(), self.layout.len(), "value count must match the layout");
        self.chol.solve(&DVector::from_column_slice(values))
    }

    /// Cross-covariance between the `order` derivative at `t` and every
    /// observation.
    pub fn cross(&self, t: f64, order: DerivativeOrder) -> DVector<f64> {
        DVector::from_iterator(
            self.layout.len(),
            self.layout
                .iter()
                .map(|o| se_kernel(t, o.t, &self.params, order, o.order)),
        )
    }

    /// Posterior mean of the `order` derivative at `t` given weights from
    /// [`GramFactor::weights`].
    pub fn mean(&self, weights: &DVector<f64>, t: f64, order: DerivativeOrder) -> f64 {
        self.layout
            .iter()
            .zip(weights.iter())
            .map(|(o, w)| se_kernel(t, o.t, &self.params, order, o.order) * w)
            .sum()
    }

    /// Posterior covariance of one derivative channel over `query`.
    pub fn covariance(&self, query: &[f64], order: DerivativeOrder) -> DMatrix<f64> {
        let m = query.len();
        let mut cross = DMatrix::zeros(self.layout.len(), m);
        for (j, &t) in query.iter().enumerate() {
            cross.set_column(j, &self.cross(t, order));
        }
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&cross)
            .expect("cholesky factor has a positive diagonal");
        let mut cov = prior_covariance(query, &self.params, order) - v.transpose() * v;
        symmetrize(&mut cov);
        cov
    }
}

fn prior_covariance(query: &[f64], p: &KernelParams, order: DerivativeOrder) -> DMatrix<f64> {
    let m = query.len();
    DMatrix::from_fn(m, m, |i, j| se_kernel(query[i], query[j], p, order, order))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// A conditioned scalar GP: factor plus weights for one set of values.
#[derive(Clone, Debug)]
pub struct GpModel {
    factor: GramFactor,
    weights: DVector<f64>,
}

impl GpModel {
    pub fn fit(obs: &[GpObservation], params: &KernelParams) -> Result<Self> {
        let factor = GramFactor::new(obs, params)?;
        let values: Vec<f64> = obs.iter().map(|o| o.value).collect();
        let weights = factor.weights(&values);
        Ok(Self { factor, weights })
    }

    pub fn mean(&self, t: f64, order: DerivativeOrder) -> f64 {
        self.factor.mean(&self.weights, t, order)
    }

    pub fn covariance(&self, query: &[f64], order: DerivativeOrder) -> DMatrix<f64> {
        self.factor.covariance(query, order)
    }

    pub fn factor(&self) -> &GramFactor {
        &self.factor
    }
}

/// Jointly inferred position, velocity and acceleration at the query times.
#[derive(Clone, Debug, PartialEq)]
pub struct GpPosterior {
    pub query_times: Vec<f64>,
    pub mean_pos: Vec<f64>,
    pub mean_vel: Vec<f64>,
    pub mean_acc: Vec<f64>,
    pub cov_pos: DMatrix<f64>,
    pub cov_vel: DMatrix<f64>,
    pub cov_acc: DMatrix<f64>,
}

impl GpPosterior {
    pub fn mean(&self, order: DerivativeOrder) -> &[f64] {
        match order {
            DerivativeOrder::Position => &self.mean_pos,
            DerivativeOrder::Velocity => &self.mean_vel,
            DerivativeOrder::Acceleration => &self.mean_acc,
        }
    }

    pub fn cov(&self, order: DerivativeOrder) -> &DMatrix<f64> {
        match order {
            DerivativeOrder::Position => &self.cov_pos,
            DerivativeOrder::Velocity => &self.cov_vel,
            DerivativeOrder::Acceleration => &self.cov_acc,
        }
    }
}

/// Conditions the zero-mean GP on all observations at once and evaluates the
/// posterior of every derivative channel at `query`.
///
/// The single joint Gram over mixed-order observations realises every block
/// of the position/velocity/acceleration inference at once; with an empty
/// observation set the prior is returned.
pub fn gp_infer(obs: &[GpObservation], query: &[f64], params: &KernelParams) -> Result<GpPosterior> {
    params.validate()?;
    if obs.is_empty() {
        let zeros = vec![0.0; query.len()];
        return Ok(GpPosterior {
            query_times: query.to_vec(),
            mean_pos: zeros.clone(),
            mean_vel: zeros.clone(),
            mean_acc: zeros,
            cov_pos: prior_covariance(query, params, DerivativeOrder::Position),
            cov_vel: prior_covariance(query, params, DerivativeOrder::Velocity),
            cov_acc: prior_covariance(query, params, DerivativeOrder::Acceleration),
        });
    }
    let model = GpModel::fit(obs, params)?;
    let channel = |order| query.iter().map(|&t| model.mean(t, order)).collect::<Vec<_>>();
    Ok(GpPosterior {
        query_times: query.to_vec(),
        mean_pos: channel(DerivativeOrder::Position),
        mean_vel: channel(DerivativeOrder::Velocity),
        mean_acc: channel(DerivativeOrder::Acceleration),
        cov_pos: model.covariance(query, DerivativeOrder::Position),
        cov_vel: model.covariance(query, DerivativeOrder::Velocity),
        cov_acc: model.covariance(query, DerivativeOrder::Acceleration),
    })
}
