//! Minimum-snap polynomial baseline.
//!
//! Each position axis is a degree-7 polynomial that minimises the integrated
//! squared snap subject to position, velocity and acceleration at both ends;
//! the end jerks are left free. Orientation uses the rotation-vector chart of
//! the GP interpolator with a degree-5 minimum-acceleration polynomial per
//! component, constrained on value and rate at both ends.

use nalgebra::{DMatrix, DVector};

use crate::gp::{SegmentSpec, TrajectorySample, TrajectorySegment};
use crate::inertial::{right_jacobian, right_jacobian_inv, so3_exp, Rotation, Vec3};
use crate::{Error, Result};

pub const POSITION_DEGREE: usize = 7;
pub const SNAP_ORDER: usize = 4;
pub const ORIENTATION_DEGREE: usize = 5;
pub const ORIENTATION_PENALTY_ORDER: usize = 2;

/// Polynomial in normalised time `u = t / duration`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySegment {
    /// Coefficients of `u^0 .. u^degree`.
    pub coeffs: DVector<f64>,
    pub duration: f64,
}

/// `d^order/du^order u^k` coefficient: k (k-1) ... (k-order+1).
fn falling(k: usize, order: usize) -> f64 {
    if order > k {
        return 0.0;
    }
    ((k - order + 1)..=k).map(|x| x as f64).product()
}

fn basis_row(degree: usize, u: f64, order: usize) -> DVector<f64> {
    DVector::from_fn(degree + 1, |k, _| {
        if k < order {
            0.0
        } else {
            falling(k, order) * u.powi((k - order) as i32)
        }
    })
}

/// `Q_ij = int_0^1 (d^m u^i)(d^m u^j) du`.
fn cost_matrix(degree: usize, order: usize) -> DMatrix<f64> {
    DMatrix::from_fn(degree + 1, degree + 1, |i, j| {
        if i < order || j < order {
            0.0
        } else {
            falling(i, order) * falling(j, order) / (i + j + 1 - 2 * order) as f64
        }
    })
}

/// Boundary condition in real time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyConstraint {
    pub at_end: bool,
    pub order: usize,
    pub value: f64,
}

impl PolySegment {
    pub fn zero(degree: usize, duration: f64) -> Self {
        Self {
            coeffs: DVector::zeros(degree + 1),
            duration,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `order`-th time derivative at time `t`.
    pub fn eval(&self, t: f64, order: usize) -> f64 {
        let u = t / self.duration;
        basis_row(self.degree(), u, order).dot(&self.coeffs) / self.duration.powi(order as i32)
    }

    /// `int_0^T (d^order p / dt^order)^2 dt`.
    pub fn derivative_cost(&self, order: usize) -> f64 {
        let q = cost_matrix(self.degree(), order);
        (self.coeffs.transpose() * q * &self.coeffs)[(0, 0)] / self.duration.powi(2 * order as i32 - 1)
    }

    pub fn snap_cost(&self) -> f64 {
        self.derivative_cost(SNAP_ORDER)
    }

    /// Constraint matrix and right-hand side in normalised time.
    pub fn constraint_system(degree: usize, duration: f64, constraints: &[PolyConstraint]) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(constraints.len(), degree + 1);
        let mut b = DVector::zeros(constraints.len());
        for (row, c) in constraints.iter().enumerate() {
            let u = if c.at_end { 1.0 } else { 0.0 };
            a.set_row(row, &basis_row(degree, u, c.order).transpose());
            b[row] = c.value * duration.powi(c.order as i32);
        }
        (a, b)
    }

    /// Polynomial of `degree` minimising the integrated square of the
    /// `penalty_order`-th derivative subject to `constraints`, by solving the
    /// KKT system of the equality-constrained quadratic program.
    pub fn fit(degree: usize, penalty_order: usize, duration: f64, constraints: &[PolyConstraint]) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("duration {duration} must be > 0")));
        }
        let n = degree + 1;
        let m = constraints.len();
        let (a, b) = Self::constraint_system(degree, duration, constraints);
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&cost_matrix(degree, penalty_order));
        kkt.view_mut((0, n), (n, m)).copy_from(&a.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&a);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(n, m).copy_from(&b);
        let sol = kkt
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|x| x.is_finite()))
            .ok_or(Error::SingularConstraints { duration })?;
        let poly = Self {
            coeffs: sol.rows(0, n).into_owned(),
            duration,
        };
        let residual = (&a * &poly.coeffs - &b).amax();
        if !(residual <= 1e-8 * (1.0 + b.amax())) {
            return Err(Error::SingularConstraints { duration });
        }
        Ok(poly)
    }
}

/// Minimum-snap positions and minimum-acceleration orientation chart.
#[derive(Clone, Debug, PartialEq)]
pub struct MinSnapSegment {
    pub position: [PolySegment; 3],
    /// Rotation vector of `start^-1 R(t)`, per component.
    pub chart: [PolySegment; 3],
    pub start_orientation: Rotation,
    pub duration: f64,
}

fn boundary(start: [f64; 3], end: [f64; 3], orders: usize) -> Vec<PolyConstraint> {
    let mut c = Vec::with_capacity(2 * orders);
    for (at_end, values) in [(false, start), (true, end)] {
        for (order, &value) in values.iter().enumerate().take(orders) {
            c.push(PolyConstraint { at_end, order, value });
        }
    }
    c
}

pub fn fit_min_snap(spec: &SegmentSpec) -> Result<MinSnapSegment> {
    spec.validate()?;
    let phi_end = spec.relative_rotation()?;
    let rate_end = right_jacobian_inv(&phi_end) * spec.end_angular_velocity;
    let fit_axis = |i: usize| {
        PolySegment::fit(
            POSITION_DEGREE,
            SNAP_ORDER,
            spec.duration,
            &boundary(
                [spec.start_position[i], spec.start_velocity[i], spec.start_acceleration[i]],
                [spec.end_position[i], spec.end_velocity[i], spec.end_acceleration[i]],
                3,
            ),
        )
    };
    let fit_chart = |i: usize| {
        PolySegment::fit(
            ORIENTATION_DEGREE,
            ORIENTATION_PENALTY_ORDER,
            spec.duration,
            &boundary([0.0, spec.start_angular_velocity[i], 0.0], [phi_end[i], rate_end[i], 0.0], 2),
        )
    };
    Ok(MinSnapSegment {
        position: [fit_axis(0)?, fit_axis(1)?, fit_axis(2)?],
        chart: [fit_chart(0)?, fit_chart(1)?, fit_chart(2)?],
        start_orientation: spec.start_orientation,
        duration: spec.duration,
    })
}

impl MinSnapSegment {
    pub fn sample(&self, t: f64) -> TrajectorySample {
        let eval = |polys: &[PolySegment; 3], order| {
            Vec3::new(polys[0].eval(t, order), polys[1].eval(t, order), polys[2].eval(t, order))
        };
        let phi = eval(&self.chart, 0);
        TrajectorySample {
            t,
            position: eval(&self.position, 0),
            velocity: eval(&self.position, 1),
            acceleration: eval(&self.position, 2),
            orientation: self.start_orientation.compose(&so3_exp(&phi)),
            angular_velocity: right_jacobian(&phi) * eval(&self.chart, 1),
        }
    }

    pub fn snap_cost(&self) -> f64 {
        self.position.iter().map(PolySegment::snap_cost).sum()
    }
}

/// Samples on the same grid as the GP interpolator.
pub fn sample_poly(seg: &MinSnapSegment, sample_rate: f64) -> TrajectorySegment {
    let grid = SegmentSpec::rest_to_rest(
        Vec3::zeros(),
        Rotation::identity(),
        Vec3::zeros(),
        Rotation::identity(),
        seg.duration,
        sample_rate,
    );
    TrajectorySegment::new(grid.sample_times().into_iter().map(|t| seg.sample(t)).collect())
}

/// Fits and samples in one step.
pub fn interpolate_min_snap(spec: &SegmentSpec) -> Result<TrajectorySegment> {
    Ok(sample_poly(&fit_min_snap(spec)?, spec.sample_rate))
}
