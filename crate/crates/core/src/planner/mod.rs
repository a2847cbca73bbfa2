//! Informative path planning with the adaptive-trace utility.
//!
//! Edges are scored by the change in trace of one covariance block along the
//! forecast: the bias block while its trace is at least `lambda`, the position
//! block afterwards. Both planners minimise the summed edge cost under a
//! travel-time budget.

mod greedy;
mod rrt;

pub use greedy::greedy_plan;
pub use rrt::{rrt_star_plan, tree_invariant_error};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eskf::{forecast_covariance, trace_bias, trace_position, Covariance, EstimatorState, Landmark, SensorModel};
use crate::gp::{segment_duration_heuristic, GpSettings, SegmentSpec, TrajectorySample, TrajectorySegment};
use crate::inertial::{Rotation, Vec3};
use crate::minsnap::interpolate_min_snap;
use crate::{Error, Result};

/// Edge durations are rounded up to a multiple of this, so every sampling
/// rate used downstream lands exactly on segment boundaries.
pub const DURATION_QUANTUM: f64 = 0.05;
pub const MAX_CONSECUTIVE_FAILURES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose6D {
    pub position: Vec3,
    pub orientation: Rotation,
}

impl Pose6D {
    pub fn new(position: Vec3, orientation: Rotation) -> Self {
        Self { position, orientation }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UtilityMode {
    BiasTrace,
    PositionTrace,
}

/// How edge modes are chosen: adaptively from the bias trace, or always on
/// the position block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModePolicy {
    #[default]
    Adaptive,
    PositionOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interpolator {
    Gp(GpSettings),
    #[serde(rename = "minsnap")]
    MinSnap,
}

impl Default for Interpolator {
    fn default() -> Self {
        Self::gp()
    }
}

impl Interpolator {
    pub fn gp() -> Self {
        Interpolator::Gp(GpSettings::default())
    }

    pub fn interpolate(&self, spec: &SegmentSpec) -> Result<TrajectorySegment> {
        match self {
            Interpolator::Gp(settings) => settings.interpolate(spec),
            Interpolator::MinSnap => interpolate_min_snap(spec),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Interpolator::Gp(_) => "gp",
            Interpolator::MinSnap => "minsnap",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl WorkspaceBounds {
    pub fn cube(half_extent: f64) -> Self {
        Self {
            min: Vec3::repeat(-half_extent),
            max: Vec3::repeat(half_extent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (0..3).all(|i| self.min[i].is_finite() && self.max[i].is_finite() && self.min[i] <= self.max[i]) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("empty workspace {:?}..{:?}", self.min, self.max)))
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub bounds: WorkspaceBounds,
    pub max_nodes: usize,
    pub near_radius: f64,
    pub lambda: f64,
    /// Travel-time budget in seconds.
    pub budget: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub candidate_count: usize,
    pub rng_seed: u64,
    /// Sampling rate of the segments used for forecasting.
    pub forecast_rate: f64,
    pub mode_policy: ModePolicy,
    pub interpolator: Interpolator,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            bounds: WorkspaceBounds::cube(10.0),
            max_nodes: 3000,
            near_radius: 2.0,
            lambda: 0.01,
            budget: 60.0,
            v_max: 1.0,
            a_max: 0.5,
            candidate_count: 5,
            rng_seed: 0,
            forecast_rate: 10.0,
            mode_policy: ModePolicy::Adaptive,
            interpolator: Interpolator::gp(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        let positive = [
            ("near_radius", self.near_radius),
            ("lambda", self.lambda),
            ("budget", self.budget),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("forecast_rate", self.forecast_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_nodes < 1 {
            return Err(Error::InvalidParameter("max_nodes must be >= 1".into()));
        }
        if self.candidate_count < 1 {
            return Err(Error::InvalidParameter("candidate_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Map and sensor model used to forecast covariances.
#[derive(Clone, Copy, Debug)]
pub struct PlanContext<'a> {
    pub map: &'a [Landmark],
    pub sensors: &'a SensorModel,
}

#[derive(Clone, Debug)]
pub struct PlanNode {
    pub id: usize,
    pub pose: Pose6D,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub cost_to_come: f64,
    /// Cost of the edge from the parent; zero for the root.
    pub edge_cost: f64,
    pub arrival_state: EstimatorState,
    pub arrival_cov: Covariance,
    pub arrival_time: f64,
    /// Incoming edge sampled at the forecast rate.
    pub segment: Option<TrajectorySegment>,
}

impl PlanNode {
    pub fn root(state: EstimatorState, cov: Covariance) -> Self {
        Self {
            id: 0,
            pose: Pose6D::new(state.r, state.rot),
            parent: None,
            children: Vec::new(),
            cost_to_come: 0.0,
            edge_cost: 0.0,
            arrival_state: EstimatorState {
                v: Vec3::zeros(),
                ..state
            },
            arrival_cov: cov,
            arrival_time: 0.0,
            segment: None,
        }
    }

    pub fn edge_duration(&self) -> f64 {
        self.segment.as_ref().map_or(0.0, TrajectorySegment::duration)
    }
}

/// Result of connecting a node to a pose.
#[derive(Clone, Debug)]
pub struct Edge {
    pub segment: TrajectorySegment,
    pub arrival_cov: Covariance,
    pub cost: f64,
    pub duration: f64,
    pub mode: UtilityMode,
}

/// One leg of a plan: move to `pose` over `duration` seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Waypoint {
    pub pose: Pose6D,
    pub duration: f64,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub nodes: Vec<PlanNode>,
    /// Node ids from the root to the selected leaf.
    pub branch: Vec<usize>,
    pub cost: f64,
}

impl PlanResult {
    pub fn waypoints(&self) -> Vec<Waypoint> {
        self.branch
            .iter()
            .skip(1)
            .map(|&id| Waypoint {
                pose: self.nodes[id].pose,
                duration: self.nodes[id].edge_duration(),
            })
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.branch.last().map_or(0.0, |&id| self.nodes[id].arrival_time)
    }

    /// Modes of the edges along the branch.
    pub fn branch_modes(&self, lambda: f64, policy: ModePolicy) -> Vec<UtilityMode> {
        self.branch
            .iter()
            .rev()
            .skip(1)
            .rev()
            .map(|&id| edge_mode(&self.nodes[id].arrival_cov, lambda, policy))
            .collect()
    }
}

/// Trace change of the block selected by `mode`; negative means the
/// uncertainty shrank.
pub fn utility(p_k: &Covariance, p_k1: &Covariance, mode: UtilityMode) -> f64 {
    match mode {
        UtilityMode::BiasTrace => trace_bias(p_k1) - trace_bias(p_k),
        UtilityMode::PositionTrace => trace_position(p_k1) - trace_position(p_k),
    }
}

pub fn select_mode(p: &Covariance, lambda: f64) -> UtilityMode {
    if trace_bias(p) >= lambda {
        UtilityMode::BiasTrace
    } else {
        UtilityMode::PositionTrace
    }
}

pub fn edge_mode(p: &Covariance, lambda: f64, policy: ModePolicy) -> UtilityMode {
    match policy {
        ModePolicy::Adaptive => select_mode(p, lambda),
        ModePolicy::PositionOnly => UtilityMode::PositionTrace,
    }
}

/// Position uniform in the box, orientation uniform on SO(3).
pub fn sample_pose<R: Rng + ?Sized>(bounds: &WorkspaceBounds, rng: &mut R) -> Pose6D {
    let position = Vec3::from_fn(|i, _| {
        let (lo, hi) = (bounds.min[i], bounds.max[i]);
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    });
    // Shoemake's construction from three uniforms.
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = nalgebra::Quaternion::new(b * (tau * u3).cos(), a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin());
    Pose6D::new(
        position,
        Rotation::from_quaternion(&nalgebra::UnitQuaternion::from_quaternion(q)),
    )
}

/// Rest-to-rest edge duration, rounded up to the duration quantum.
pub fn edge_duration(from: &Vec3, to: &Vec3, config: &PlannerConfig) -> f64 {
    let raw = segment_duration_heuristic(from, to, config.v_max, config.a_max);
    (raw / DURATION_QUANTUM - 1e-9).ceil() * DURATION_QUANTUM
}

/// Whether a rest-to-rest edge from `from` to `to` ends within the budget.
pub fn fits_budget(from: &PlanNode, to: &Pose6D, config: &PlannerConfig) -> bool {
    from.arrival_time + edge_duration(&from.pose.position, &to.position, config) <= config.budget
}

/// Interpolates a rest-to-rest segment from `from` to `to`, forecasts the
/// covariance along it and scores it with the mode selected at `from`.
pub fn connect(from: &PlanNode, to: &Pose6D, ctx: &PlanContext, config: &PlannerConfig) -> Result<Edge> {
    let duration = edge_duration(&from.pose.position, &to.position, config);
    let spec = SegmentSpec::rest_to_rest(
        from.pose.position,
        from.pose.orientation,
        to.position,
        to.orientation,
        duration,
        config.forecast_rate,
    );
    let segment = config.interpolator.interpolate(&spec)?;
    Ok(score_segment(from, segment, ctx, config))
}

/// Forecast and cost of an already interpolated segment leaving `from`.
pub fn score_segment(from: &PlanNode, segment: TrajectorySegment, ctx: &PlanContext, config: &PlannerConfig) -> Edge {
    let mode = edge_mode(&from.arrival_cov, config.lambda, config.mode_policy);
    let arrival_cov = forecast_covariance(&from.arrival_state, &from.arrival_cov, &segment, ctx.map, ctx.sensors);
    Edge {
        cost: utility(&from.arrival_cov, &arrival_cov, mode),
        duration: segment.duration(),
        segment,
        arrival_cov,
        mode,
    }
}

fn child_node(id: usize, parent: &PlanNode, pose: Pose6D, edge: Edge) -> PlanNode {
    PlanNode {
        id,
        pose,
        parent: Some(parent.id),
        children: Vec::new(),
        cost_to_come: parent.cost_to_come + edge.cost,
        edge_cost: edge.cost,
        arrival_state: EstimatorState {
            r: pose.position,
            v: Vec3::zeros(),
            rot: pose.orientation,
            ..parent.arrival_state
        },
        arrival_cov: edge.arrival_cov,
        arrival_time: parent.arrival_time + edge.duration,
        segment: Some(edge.segment),
    }
}

/// Chains rest-to-rest segments through `waypoints`, starting at `start`.
pub fn realize_waypoints(
    start: &Pose6D,
    waypoints: &[Waypoint],
    interpolator: &Interpolator,
    sample_rate: f64,
) -> Result<TrajectorySegment> {
    let mut out = TrajectorySegment::new(vec![TrajectorySample::at_rest(0.0, start.position, start.orientation)]);
    let mut from = *start;
    for w in waypoints {
        let spec = SegmentSpec::rest_to_rest(
            from.position,
            from.orientation,
            w.pose.position,
            w.pose.orientation,
            w.duration,
            sample_rate,
        );
        out.append(&interpolator.interpolate(&spec)?);
        from = w.pose;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eskf::{PriorStd, BIAS_F, POS};
    use crate::inertial::so3_exp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(super) fn cube_map() -> Vec<Landmark> {
        (0..8)
            .map(|i| Landmark {
                id: i,
                position: Vec3::new(
                    if i & 1 == 0 { -10.0 } else { 10.0 },
                    if i & 2 == 0 { -10.0 } else { 10.0 },
                    if i & 4 == 0 { -10.0 } else { 10.0 },
                ),
            })
            .collect()
    }

    pub(super) fn root() -> PlanNode {
        let prior = PriorStd::default();
        PlanNode::root(
            EstimatorState::new(Vec3::zeros(), Vec3::zeros(), Rotation::identity()),
            prior.covariance(),
        )
    }

    #[test]
    fn utility_examples() {
        let p = Covariance::identity() * 2.0;
        assert_eq!(utility(&p, &p, UtilityMode::BiasTrace), 0.0);
        let mut q = p;
        for i in BIAS_F..BIAS_F + 6 {
            q[(i, i)] = 1.0;
        }
        assert_eq!(utility(&p, &q, UtilityMode::BiasTrace), -6.0);
        assert_eq!(utility(&p, &q, UtilityMode::PositionTrace), 0.0);
        let mut r = p;
        r[(POS, POS)] = 1.5;
        assert_eq!(utility(&p, &r, UtilityMode::PositionTrace), -0.5);
    }

    #[test]
    fn select_mode_threshold() {
        let with_bias = |t: f64| {
            let mut p = Covariance::zeros();
            p[(BIAS_F, BIAS_F)] = t;
            p
        };
        assert_eq!(select_mode(&with_bias(0.1), 0.01), UtilityMode::BiasTrace);
        assert_eq!(select_mode(&with_bias(0.001), 0.01), UtilityMode::PositionTrace);
        assert_eq!(select_mode(&with_bias(0.01), 0.01), UtilityMode::BiasTrace);
        assert_eq!(
            edge_mode(&with_bias(0.1), 0.01, ModePolicy::PositionOnly),
            UtilityMode::PositionTrace
        );
    }

    #[test]
    fn degenerate_box_samples_point() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        let bounds = WorkspaceBounds { min: p, max: p };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = sample_pose(&bounds, &mut rng);
        let b = sample_pose(&bounds, &mut rng);
        assert_eq!(a.position, p);
        assert!(a.orientation.is_valid(1e-9));
        assert!(a.orientation.angle_to(&b.orientation) > 1e-6);
    }

    #[test]
    fn sampling_is_uniform_and_deterministic() {
        let bounds = WorkspaceBounds {
            min: Vec3::new(-10.0, 0.0, 5.0),
            max: Vec3::new(10.0, 4.0, 25.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10_000;
        let mut mean = Vec3::zeros();
        let mut mean_rot = nalgebra::Matrix3::zeros();
        for _ in 0..n {
            let s = sample_pose(&bounds, &mut rng);
            assert!(bounds.contains(&s.position));
            mean += s.position / n as f64;
            mean_rot += s.orientation.matrix() / n as f64;
        }
        let extent = bounds.max - bounds.min;
        for i in 0..3 {
            assert!((mean[i] - bounds.center()[i]).abs() < 0.02 * extent[i]);
        }
        // Haar measure has zero mean rotation matrix.
        assert!(mean_rot.amax() < 0.03);

        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(sample_pose(&bounds, &mut a), sample_pose(&bounds, &mut b));
        }
    }

    #[test]
    fn connect_to_self_without_landmarks_costs_nonnegative() {
        let sensors = SensorModel::default();
        let ctx = PlanContext { map: &[], sensors: &sensors };
        let config = PlannerConfig::default();
        let r = root();
        let edge = connect(&r, &r.pose, &ctx, &config).unwrap();
        assert!(edge.cost >= 0.0);
        assert_eq!(edge.duration, 0.5);
    }

    #[test]
    fn excited_edge_costs_no_more_than_bland_edge() {
        let sensors = SensorModel::default();
        let map = cube_map();
        let ctx = PlanContext { map: &map, sensors: &sensors };
        let config = PlannerConfig::default();
        let r = root();
        assert_eq!(select_mode(&r.arrival_cov, config.lambda), UtilityMode::BiasTrace);
        let target = Vec3::new(4.0, 3.0, -2.0);
        let excited = connect(&r, &Pose6D::new(target, so3_exp(&Vec3::new(1.5, -1.0, 1.2))), &ctx, &config).unwrap();
        let bland = connect(&r, &Pose6D::new(target, Rotation::identity()), &ctx, &config).unwrap();
        assert_eq!(excited.duration, bland.duration);
        assert!(excited.cost <= bland.cost, "{} vs {}", excited.cost, bland.cost);
    }

    #[test]
    fn connect_is_idempotent() {
        let sensors = SensorModel::default();
        let map = cube_map();
        let ctx = PlanContext { map: &map, sensors: &sensors };
        let config = PlannerConfig::default();
        let r = root();
        let to = Pose6D::new(Vec3::new(-2.0, 1.0, 3.0), so3_exp(&Vec3::new(0.3, 0.2, 0.1)));
        let a = connect(&r, &to, &ctx, &config).unwrap();
        let b = connect(&r, &to, &ctx, &config).unwrap();
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        assert_eq!(a.cost, utility(&r.arrival_cov, &a.arrival_cov, a.mode));
    }

    #[test]
    fn connect_rejects_half_turn() {
        let sensors = SensorModel::default();
        let ctx = PlanContext { map: &[], sensors: &sensors };
        let r = root();
        let to = Pose6D::new(Vec3::x(), so3_exp(&Vec3::new(0.0, std::f64::consts::PI - 0.001, 0.0)));
        assert!(connect(&r, &to, &ctx, &PlannerConfig::default()).is_err());
    }

    #[test]
    fn durations_are_quantized() {
        let config = PlannerConfig::default();
        for k in 0..50 {
            let d = edge_duration(&Vec3::zeros(), &Vec3::new(k as f64 * 0.173, 0.0, 0.0), &config);
            let q = d / DURATION_QUANTUM;
            assert!((q - q.round()).abs() < 1e-9);
            assert!(d >= segment_duration_heuristic(&Vec3::zeros(), &Vec3::new(k as f64 * 0.173, 0.0, 0.0), 1.0, 0.5) - 1e-12);
        }
    }

    #[test]
    fn realized_waypoints_are_continuous() {
        let start = Pose6D::new(Vec3::zeros(), Rotation::identity());
        let waypoints = [
            Waypoint {
                pose: Pose6D::new(Vec3::new(2.0, 0.0, 1.0), so3_exp(&Vec3::new(0.0, 0.5, 0.0))),
                duration: 3.0,
            },
            Waypoint {
                pose: Pose6D::new(Vec3::new(0.0, -2.0, 0.0), so3_exp(&Vec3::new(0.4, 0.0, -0.3))),
                duration: 2.5,
            },
        ];
        for interp in [Interpolator::gp(), Interpolator::MinSnap] {
            let traj = realize_waypoints(&start, &waypoints, &interp, 200.0).unwrap();
            assert_eq!(traj.len(), 1101);
            assert!((traj.duration() - 5.5).abs() < 1e-9);
            let mid = traj.samples()[600];
            assert!((mid.position - waypoints[0].pose.position).amax() < 1e-6);
            assert!(mid.velocity.amax() < 1e-6);
        }
    }
}
