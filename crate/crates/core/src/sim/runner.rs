use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{ExperimentConfig, PlannerKind};
use super::metrics::{record_metrics, RecordRow, RunRecord, RunStatus, Summary};
use super::scenario::Scenario;
use crate::eskf::{trace_bias, trace_position, Eskf, EstimatorState, Landmark, RangeMeasurement, SensorModel};
use crate::gp::TrajectorySegment;
use crate::inertial::{gaussian3, integrate_kinematics, so3_exp, synthesize_imu, ImuSample, TrueState};
use crate::planner::{greedy_plan, realize_waypoints, rrt_star_plan, PlanContext, PlanResult, Pose6D};
use crate::{Error, Result};

/// Plans shorter than this are replaced by holding the current pose.
const MIN_PLAN_BUDGET: f64 = 2.0;

/// Independent random streams of one run. Arms sharing a seed draw the same
/// numbers for the same purpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
enum Stream {
    Initial = 0,
    ImuNoise = 1,
    BiasWalk = 2,
    RangeNoise = 3,
    Planner = 4,
}

fn stream(seed: u64, run_index: usize, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run_index as u64));
    rng.set_stream(which as u64);
    rng
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

struct Simulation<'a> {
    config: &'a ExperimentConfig,
    sensors: SensorModel,
    map: &'a [Landmark],
    truth: TrueState,
    filter: Eskf,
    imu_rng: ChaCha8Rng,
    walk_rng: ChaCha8Rng,
    range_rng: ChaCha8Rng,
    imu_steps: u64,
    imu_per_range: u64,
    imu_per_record: u64,
    planned_steps: u64,
    rows: Vec<RecordRow>,
    executed: Vec<crate::gp::TrajectorySample>,
}

impl<'a> Simulation<'a> {
    fn new(config: &'a ExperimentConfig, scenario: &'a Scenario, run_index: usize) -> Self {
        let seed = config.experiment.seed;
        let mut init = stream(seed, run_index, Stream::Initial);
        let start = scenario.start;
        let truth = TrueState {
            b_f: gaussian3(&mut init, config.truth.accel_bias_std),
            b_w: gaussian3(&mut init, config.truth.gyro_bias_std),
            ..TrueState::at_rest(start.position, start.orientation)
        };
        let prior = &config.prior;
        let estimate = EstimatorState::new(
            truth.r + gaussian3(&mut init, prior.position),
            truth.v + gaussian3(&mut init, prior.velocity),
            truth.rot.compose(&so3_exp(&gaussian3(&mut init, prior.orientation))),
        );
        let sensors = config.sensor_model();
        let filter = Eskf::new(estimate, prior.covariance(), sensors.imu);
        Self {
            config,
            sensors,
            map: &scenario.map,
            truth,
            filter,
            imu_rng: stream(seed, run_index, Stream::ImuNoise),
            walk_rng: stream(seed, run_index, Stream::BiasWalk),
            range_rng: stream(seed, run_index, Stream::RangeNoise),
            imu_steps: 0,
            imu_per_range: (sensors.imu_rate / sensors.range_rate).round() as u64,
            imu_per_record: (sensors.imu_rate / config.experiment.record_rate).round() as u64,
            planned_steps: 0,
            rows: Vec::new(),
            executed: Vec::new(),
        }
    }

    /// Flies `traj` (sampled at the IMU rate) for at most `max_steps` steps.
    /// Returns the number of steps taken.
    /// Recorded steps are timed from the start of the planned phase.
    fn execute(&mut self, traj: &TrajectorySegment, max_steps: usize, record: bool) -> Result<usize> {
        let dt = 1.0 / self.sensors.imu_rate;
        let noise = self.sensors.imu;
        let samples = traj.samples();
        let steps = (samples.len() - 1).min(max_steps);
        for k in 0..steps {
            let s = &samples[k];
            let noisy = synthesize_imu(s.t, &self.truth, &s.acceleration, &s.angular_velocity, &noise, &mut self.imu_rng);
            let ideal = ImuSample {
                t: s.t,
                f_tilde: self.truth.rot.inverse_rotate(&(s.acceleration - noise.gravity)) + self.truth.b_f,
                omega_tilde: s.angular_velocity + self.truth.b_w,
            };
            self.filter.predict(&noisy, dt);
            self.truth = integrate_kinematics(&self.truth, &ideal, &noise, dt, &mut self.walk_rng);
            self.imu_steps += 1;

            if self.imu_steps % self.imu_per_range == 0 {
                self.range_epoch(self.imu_steps as f64 / self.sensors.imu_rate)?;
            }
            if !record {
                continue;
            }
            self.planned_steps += 1;
            if self.planned_steps % self.imu_per_record == 0 {
                let t = self.planned_steps as f64 / self.sensors.imu_rate;
                self.rows.push(self.row(t));
                self.executed.push(crate::gp::TrajectorySample { t, ..samples[k + 1] });
            }
        }
        Ok(steps)
    }

    fn range_epoch(&mut self, t: f64) -> Result<()> {
        for l in self.map {
            // Drawn for every landmark so paired arms stay aligned.
            let n: f64 = self.range_rng.sample(StandardNormal);
            let range = (self.truth.r - l.position).norm();
            if self.sensors.in_range(range) {
                let meas = RangeMeasurement {
                    t,
                    landmark_id: l.id,
                    range: (range + self.sensors.range_noise * n).max(0.0),
                    noise_std: self.sensors.range_noise,
                };
                self.filter.update_range(&meas, self.map)?;
            }
        }
        Ok(())
    }

    fn row(&self, t: f64) -> RecordRow {
        RecordRow {
            t,
            true_position: self.truth.r,
            est_position: self.filter.state.r,
            true_accel_bias: self.truth.b_f,
            est_accel_bias: self.filter.state.b_f,
            trace_bias: trace_bias(&self.filter.p),
            trace_position: trace_position(&self.filter.p),
        }
    }

    fn plan(&self, budget: f64, seed: u64) -> Result<Option<PlanResult>> {
        let mut pc = self.config.planner_config(seed);
        pc.budget = budget;
        let ctx = PlanContext {
            map: self.map,
            sensors: &self.sensors,
        };
        let state = &self.filter.state;
        let plan = match self.config.experiment.planner {
            PlannerKind::AdaptiveRrt | PlannerKind::PositionRrt => rrt_star_plan(&pc, state, &self.filter.p, &ctx)?,
            PlannerKind::AdaptiveGreedy | PlannerKind::PositionGreedy => greedy_plan(&pc, state, &self.filter.p, &ctx)?,
            PlannerKind::Hold => return Ok(None),
        };
        Ok(Some(plan))
    }
}

/// Executes one Monte Carlo run: the shared prior sweep, then receding-horizon
/// planning from the filter estimate until the planned phase is complete.
pub fn run_single(
    config: &ExperimentConfig,
    scenario: &Scenario,
    prior: &TrajectorySegment,
    run_index: usize,
) -> Result<RunRecord> {
    let mut sim = Simulation::new(config, scenario, run_index);
    sim.execute(prior, usize::MAX, false)?;

    let mut planner_rng = stream(config.experiment.seed, run_index, Stream::Planner);
    let rate = sim.sensors.imu_rate;
    let total_steps = (config.experiment.duration * rate).round() as usize;
    let mut done = 0;
    while done < total_steps {
        let remaining = (total_steps - done) as f64 / rate;
        let budget = config.planner.horizon.min(remaining);
        let seed = planner_rng.next_u64();
        let here = Pose6D::new(sim.filter.state.r, sim.filter.state.rot);
        let plan = if budget >= MIN_PLAN_BUDGET {
            match sim.plan(budget, seed) {
                Err(Error::NoFeasibleEdge { attempts }) => {
                    log::warn!("run {run_index}: no feasible edge after {attempts} attempts, holding");
                    None
                }
                other => other?,
            }
        } else {
            None
        };
        let waypoints = plan.map(|p| p.waypoints()).unwrap_or_default();
        let traj = if waypoints.is_empty() {
            TrajectorySegment::stationary(here.position, here.orientation, budget, rate)
        } else {
            realize_waypoints(&here, &waypoints, &config.interpolator(), rate)?
        };
        log::debug!(
            "run {run_index}: t={:.2} planned {} waypoints over {:.2} s",
            done as f64 / rate,
            waypoints.len(),
            traj.duration()
        );
        done += sim.execute(&traj, total_steps - done, true)?;
    }
    Ok(RunRecord {
        run_index,
        rows: sim.rows,
        trajectory: TrajectorySegment::new(sim.executed),
    })
}

/// Runs every Monte Carlo run of the experiment in parallel. Config errors
/// are returned; a failing run is recorded in the summary and skipped.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let scenario = Scenario::build(config)?;
    let prior = scenario.prior_trajectory(config.sensors.imu_rate)?;
    let outcomes: Vec<(usize, Result<RunRecord>)> = (0..config.experiment.num_runs)
        .into_par_iter()
        .map(|k| (k, run_single(config, &scenario, &prior, k)))
        .collect();

    let mut records = Vec::new();
    let mut statuses = Vec::new();
    for (k, outcome) in outcomes {
        match outcome {
            Ok(record) => {
                let m = record_metrics(&record, config.experiment.final_window, config.planner.lambda);
                statuses.push((k, RunStatus::Ok(m)));
                records.push(record);
            }
            Err(e) => {
                log::warn!("run {k} failed: {e}");
                statuses.push((k, RunStatus::Failed(e.to_string())));
            }
        }
    }
    Ok(ExperimentResult {
        records,
        summary: Summary::new(statuses),
    })
}

/// One planning round from the state reached after the prior sweep of run
/// `run_index`.
pub fn plan_once(config: &ExperimentConfig, run_index: usize) -> Result<(Pose6D, PlanResult)> {
    config.validate()?;
    let scenario = Scenario::build(config)?;
    let prior = scenario.prior_trajectory(config.sensors.imu_rate)?;
    let mut sim = Simulation::new(config, &scenario, run_index);
    sim.execute(&prior, usize::MAX, false)?;
    let seed = stream(config.experiment.seed, run_index, Stream::Planner).next_u64();
    let here = Pose6D::new(sim.filter.state.r, sim.filter.state.rot);
    let plan = sim
        .plan(config.planner.horizon, seed)?
        .ok_or_else(|| Error::Config("the hold planner does not produce a plan".into()))?;
    Ok((here, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inertial::{ImuNoiseSpec, Vec3};

    fn quick_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.experiment.num_runs = 2;
        c.experiment.duration = 20.0;
        c.experiment.final_window = 5.0;
        c.scenario.prior_duration = 6.0;
        c.planner.max_nodes = 40;
        c.planner.horizon = 10.0;
        c
    }

    #[test]
    fn static_noise_free_run_keeps_initial_error() {
        let mut c = quick_config();
        c.experiment.scenario = "static".into();
        c.experiment.num_runs = 1;
        c.experiment.planner = PlannerKind::Hold;
        c.imu = ImuNoiseSpec::noiseless(Vec3::new(0.0, 0.0, -9.81));
        c.truth.accel_bias_std = 0.0;
        c.truth.gyro_bias_std = 0.0;
        c.prior.velocity = 0.0;
        c.prior.orientation = 0.0;
        let result = run_experiment(&c).unwrap();
        let rows = &result.records[0].rows;
        assert_eq!(rows.len(), 400);
        let e0 = rows[0].position_error();
        assert!(e0.norm() > 0.0);
        for r in rows {
            assert_eq!(r.position_error(), e0);
        }
    }

    #[test]
    fn identical_seeds_give_identical_records() {
        let c = quick_config();
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.records[0].rows.len(), 400);
        assert_eq!(a.records[0].trajectory.len(), 400);
        assert_ne!(a.records[0].rows, a.records[1].rows);
    }

    #[test]
    fn paired_arms_share_initial_conditions() {
        let c = quick_config();
        let mut d = c.clone();
        d.experiment.planner = PlannerKind::PositionRrt;
        let scenario = Scenario::build(&c).unwrap();
        let a = Simulation::new(&c, &scenario, 3);
        let b = Simulation::new(&d, &scenario, 3);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.filter.state, b.filter.state);
    }

    #[test]
    fn all_planners_complete() {
        for kind in PlannerKind::ALL {
            let mut c = quick_config();
            c.experiment.num_runs = 1;
            c.experiment.planner = kind;
            let result = run_experiment(&c).unwrap();
            assert_eq!(result.summary.failed, 0, "{}", kind.name());
            assert!(result.records[0].rows.iter().all(|r| r.localization_error().is_finite()));
        }
    }
}
