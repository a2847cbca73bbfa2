use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eskf::{PriorStd, SensorModel};
use crate::gp::GpSettings;
use crate::inertial::{ImuNoiseSpec, Vec3};
use crate::planner::{Interpolator, ModePolicy, PlannerConfig, WorkspaceBounds};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    AdaptiveRrt,
    PositionRrt,
    AdaptiveGreedy,
    PositionGreedy,
    /// Hold the start pose.
    Hold,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::AdaptiveRrt,
        PlannerKind::PositionRrt,
        PlannerKind::AdaptiveGreedy,
        PlannerKind::PositionGreedy,
        PlannerKind::Hold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::AdaptiveRrt => "adaptive_rrt",
            PlannerKind::PositionRrt => "position_rrt",
            PlannerKind::AdaptiveGreedy => "adaptive_greedy",
            PlannerKind::PositionGreedy => "position_greedy",
            PlannerKind::Hold => "hold",
        }
    }

    pub fn policy(self) -> ModePolicy {
        match self {
            PlannerKind::PositionRrt | PlannerKind::PositionGreedy => ModePolicy::PositionOnly,
            _ => ModePolicy::Adaptive,
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown planner '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolatorKind {
    Gp,
    Minsnap,
}

impl std::str::FromStr for InterpolatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gp" => Ok(InterpolatorKind::Gp),
            "minsnap" => Ok(InterpolatorKind::Minsnap),
            _ => Err(Error::Config(format!("unknown interpolator '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub scenario: String,
    pub planner: PlannerKind,
    pub interpolator: InterpolatorKind,
    pub num_runs: usize,
    /// Length of the planned phase in seconds.
    pub duration: f64,
    pub seed: u64,
    pub record_rate: f64,
    /// Window at the end of a run over which final errors are averaged.
    pub final_window: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            scenario: "cube".into(),
            planner: PlannerKind::AdaptiveRrt,
            interpolator: InterpolatorKind::Gp,
            num_runs: 10,
            duration: 300.0,
            seed: 0,
            record_rate: 20.0,
            final_window: 30.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSection {
    pub imu_rate: f64,
    pub range_rate: f64,
    pub range_noise: f64,
    /// Zero or negative means unlimited.
    pub max_range: f64,
}

impl Default for SensorSection {
    fn default() -> Self {
        let s = SensorModel::default();
        Self {
            imu_rate: s.imu_rate,
            range_rate: s.range_rate,
            range_noise: s.range_noise,
            max_range: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub max_nodes: usize,
    pub near_radius: f64,
    pub lambda: f64,
    /// Travel-time budget of each receding-horizon plan.
    pub horizon: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub candidate_count: usize,
    pub forecast_rate: f64,
    /// Half extent of the sampling box, centred on the origin.
    pub workspace_half_extent: f64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        let p = PlannerConfig::default();
        Self {
            max_nodes: 300,
            near_radius: p.near_radius,
            lambda: p.lambda,
            horizon: p.budget,
            v_max: p.v_max,
            a_max: p.a_max,
            candidate_count: p.candidate_count,
            forecast_rate: p.forecast_rate,
            workspace_half_extent: 10.0,
        }
    }
}

/// Spread of the true initial biases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSection {
    pub accel_bias_std: f64,
    pub gyro_bias_std: f64,
}

impl Default for TruthSection {
    fn default() -> Self {
        let p = PriorStd::default();
        Self {
            accel_bias_std: p.accel_bias,
            gyro_bias_std: p.gyro_bias,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Landmarks sit on the corners of a cube with this half extent.
    pub landmark_half_extent: f64,
    /// Explicit landmark positions; replaces the cube corners when non-empty.
    pub landmarks: Vec<[f64; 3]>,
    /// Length of the shared exploration sweep flown before planning.
    pub prior_duration: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            landmark_half_extent: 10.0,
            landmarks: Vec::new(),
            prior_duration: 60.0,
        }
    }
}

/// Full experiment description, read from TOML.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub imu: ImuNoiseSpec,
    pub sensors: SensorSection,
    pub gp: GpSettings,
    pub planner: PlannerSection,
    pub prior: PriorStd,
    pub truth: TruthSection,
    pub scenario: ScenarioSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        let e = &self.experiment;
        if e.num_runs < 1 {
            return Err(Error::Config("num_runs must be >= 1".into()));
        }
        for (name, v) in [
            ("duration", e.duration),
            ("record_rate", e.record_rate),
            ("final_window", e.final_window),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.scenario.prior_duration >= 0.0) {
            return Err(Error::Config("prior_duration must be >= 0".into()));
        }
        super::scenario::Scenario::build(self)?;
        self.sensor_model().validate().map_err(cfg)?;
        let ratio = self.sensors.imu_rate / self.sensors.range_rate;
        let rec = self.sensors.imu_rate / e.record_rate;
        if (ratio - ratio.round()).abs() > 1e-9 || (rec - rec.round()).abs() > 1e-9 {
            return Err(Error::Config(
                "imu_rate must be an integer multiple of range_rate and record_rate".into(),
            ));
        }
        self.planner_config(0).validate().map_err(cfg)?;
        let prior = [
            self.prior.position,
            self.prior.velocity,
            self.prior.orientation,
            self.prior.accel_bias,
            self.prior.gyro_bias,
            self.truth.accel_bias_std,
            self.truth.gyro_bias_std,
        ];
        if prior.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("standard deviations must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn sensor_model(&self) -> SensorModel {
        SensorModel {
            imu: self.imu,
            imu_rate: self.sensors.imu_rate,
            range_rate: self.sensors.range_rate,
            range_noise: self.sensors.range_noise,
            max_range: (self.sensors.max_range > 0.0).then_some(self.sensors.max_range),
        }
    }

    pub fn interpolator(&self) -> Interpolator {
        match self.experiment.interpolator {
            InterpolatorKind::Gp => Interpolator::Gp(self.gp),
            InterpolatorKind::Minsnap => Interpolator::MinSnap,
        }
    }

    pub fn planner_config(&self, rng_seed: u64) -> PlannerConfig {
        let p = &self.planner;
        PlannerConfig {
            bounds: WorkspaceBounds::cube(p.workspace_half_extent),
            max_nodes: p.max_nodes,
            near_radius: p.near_radius,
            lambda: p.lambda,
            budget: p.horizon,
            v_max: p.v_max,
            a_max: p.a_max,
            candidate_count: p.candidate_count,
            rng_seed,
            forecast_rate: p.forecast_rate,
            mode_policy: self.experiment.planner.policy(),
            interpolator: self.interpolator(),
        }
    }

    pub fn landmark_positions(&self) -> Vec<Vec3> {
        if !self.scenario.landmarks.is_empty() {
            return self.scenario.landmarks.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        }
        let h = self.scenario.landmark_half_extent;
        (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { -h } else { h },
                    if i & 2 == 0 { -h } else { h },
                    if i & 4 == 0 { -h } else { h },
                )
            })
            .collect()
    }
}
