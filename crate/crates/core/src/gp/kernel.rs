use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hyperparameters of `k(t, t') = s2 * exp(-(t - t')^2 / (2 l^2))`.
///
/// `jitter` is relative: `jitter * signal_variance` is added to the Gram
/// diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub lengthscale: f64,
    pub jitter: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, lengthscale: f64, jitter: f64) -> Result<Self> {
        let p = Self {
            signal_variance,
            lengthscale,
            jitter,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidParameter("signal variance must be > 0".into()));
        }
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
            return Err(Error::InvalidParameter("lengthscale must be > 0".into()));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::InvalidParameter("jitter must be >= 0".into()));
        }
        Ok(())
    }
}

/// Which time derivative of the underlying position process an observation
/// or query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DerivativeOrder {
    Position = 0,
    Velocity = 1,
    Acceleration = 2,
}

impl DerivativeOrder {
    pub const ALL: [DerivativeOrder; 3] = [
        DerivativeOrder::Position,
        DerivativeOrder::Velocity,
        DerivativeOrder::Acceleration,
    ];

    pub fn as_usize(self) -> usize {
        self as usize
    }
}

// Probabilists' Hermite polynomials: d^n/du^n exp(-u^2/2) = (-1)^n He_n(u) exp(-u^2/2).
fn hermite(n: usize, u: f64) -> f64 {
    let u2 = u * u;
    match n {
        0 => 1.0,
        1 => u,
        2 => u2 - 1.0,
        3 => u * (u2 - 3.0),
        4 => u2 * (u2 - 6.0) + 3.0,
        _ => unreachable!("derivative orders are bounded by 2 per argument"),
    }
}

/// `d^a/dt1^a d^b/dt2^b k(t1, t2)` for the squared-exponential kernel.
pub fn se_kernel(
    t1: f64,
    t2: f64,
    p: &KernelParams,
    left: DerivativeOrder,
    right: DerivativeOrder,
) -> f64 {
    let a = left.as_usize();
    let n = a + right.as_usize();
    let u = (t1 - t2) / p.lengthscale;
    // With tau = t1 - t2, d/dt2 = -d/dtau, which leaves an overall (-1)^a.
    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
    sign * p.signal_variance * p.lengthscale.powi(-(n as i32)) * hermite(n, u) * (-0.5 * u * u).exp()
}
