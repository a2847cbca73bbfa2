use crate::eskf::Landmark;
use crate::gp::{GpSettings, TrajectorySegment};
use crate::inertial::{Rotation, Vec3};
use crate::planner::{realize_waypoints, Interpolator, Pose6D, Waypoint};
use crate::{Error, Result};

use super::config::ExperimentConfig;

pub const SCENARIOS: [&str; 2] = ["cube", "static"];

/// Lawnmower sweep at constant orientation: (corner, leg duration) for a
/// 60 s sweep, rescaled to the configured prior duration.
const LAWNMOWER: [([f64; 3], f64); 7] = [
    ([-4.0, -4.0, 0.0], 8.0),
    ([4.0, -4.0, 0.0], 10.0),
    ([4.0, 0.0, 0.0], 6.0),
    ([-4.0, 0.0, 0.0], 10.0),
    ([-4.0, 4.0, 0.0], 6.0),
    ([4.0, 4.0, 0.0], 10.0),
    ([0.0, 0.0, 0.0], 10.0),
];

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub map: Vec<Landmark>,
    pub start: Pose6D,
    /// Exploration sweep flown before planning, identical for every arm.
    pub prior_waypoints: Vec<Waypoint>,
}

impl Scenario {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        let name = config.experiment.scenario.as_str();
        let start = Pose6D::new(Vec3::zeros(), Rotation::identity());
        match name {
            "cube" => {
                let scale = config.scenario.prior_duration / 60.0;
                let prior_waypoints = if scale > 0.0 {
                    LAWNMOWER
                        .iter()
                        .map(|&(p, d)| Waypoint {
                            pose: Pose6D::new(Vec3::new(p[0], p[1], p[2]), Rotation::identity()),
                            duration: d * scale,
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                let map = config
                    .landmark_positions()
                    .into_iter()
                    .enumerate()
                    .map(|(i, position)| Landmark { id: i as u32, position })
                    .collect();
                Ok(Self {
                    name: name.into(),
                    map,
                    start,
                    prior_waypoints,
                })
            }
            "static" => Ok(Self {
                name: name.into(),
                map: Vec::new(),
                start,
                prior_waypoints: Vec::new(),
            }),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected one of {})",
                SCENARIOS.join(", ")
            ))),
        }
    }

    pub fn prior_duration(&self) -> f64 {
        self.prior_waypoints.iter().map(|w| w.duration).sum()
    }

    /// The exploration sweep sampled at `rate`, always with the default GP
    /// interpolator so every arm flies the same prior.
    pub fn prior_trajectory(&self, rate: f64) -> Result<TrajectorySegment> {
        realize_waypoints(&self.start, &self.prior_waypoints, &Interpolator::Gp(GpSettings::default()), rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_scenario_layout() {
        let config = ExperimentConfig::default();
        let s = Scenario::build(&config).unwrap();
        assert_eq!(s.map.len(), 8);
        assert!(s.map.iter().all(|l| l.position.iter().all(|c| c.abs() == 10.0)));
        assert!((s.prior_duration() - 60.0).abs() < 1e-12);
        let prior = s.prior_trajectory(200.0).unwrap();
        assert_eq!(prior.len(), 12_001);
        let end = prior.last().unwrap();
        assert!(end.position.norm() < 1e-6 && end.velocity.norm() < 1e-6);
        assert!(prior.samples().iter().all(|x| x.orientation.angle_to(&Rotation::identity()) < 1e-9));
    }

    #[test]
    fn static_scenario_has_no_landmarks() {
        let mut config = ExperimentConfig::default();
        config.experiment.scenario = "static".into();
        let s = Scenario::build(&config).unwrap();
        assert!(s.map.is_empty());
        assert_eq!(s.prior_trajectory(200.0).unwrap().len(), 1);
    }
}
