use crate::gp::TrajectorySegment;
use crate::inertial::Vec3;

/// One recorded timestep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordRow {
    pub t: f64,
    pub true_position: Vec3,
    pub est_position: Vec3,
    pub true_accel_bias: Vec3,
    pub est_accel_bias: Vec3,
    pub trace_bias: f64,
    pub trace_position: f64,
}

impl RecordRow {
    /// Estimated minus true position.
    pub fn position_error(&self) -> Vec3 {
        self.est_position - self.true_position
    }

    pub fn localization_error(&self) -> f64 {
        self.position_error().norm()
    }

    pub fn bias_error(&self) -> f64 {
        (self.est_accel_bias - self.true_accel_bias).norm()
    }
}

/// Output of one Monte Carlo run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run_index: usize,
    pub rows: Vec<RecordRow>,
    /// Planned trajectory that was executed, at the record rate.
    pub trajectory: TrajectorySegment,
}

/// Per-run quantities entering the summary, computable from the run CSV.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricsInput {
    pub t: f64,
    pub bias_err: f64,
    pub loc_err: f64,
    pub trace_bias: f64,
}

impl From<&RecordRow> for MetricsInput {
    fn from(r: &RecordRow) -> Self {
        Self {
            t: r.t,
            bias_err: r.bias_error(),
            loc_err: r.localization_error(),
            trace_bias: r.trace_bias,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMetrics {
    /// RMSE over time of the accelerometer-bias error norm.
    pub bias_rmse: f64,
    /// RMSE over time of the position error norm.
    pub loc_rmse: f64,
    /// RMS errors over the final window.
    pub final_bias_err: f64,
    pub final_loc_err: f64,
    /// First time the bias trace drops below the threshold.
    pub convergence_time: Option<f64>,
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// RMSE metrics of one run. `final_window` is in seconds, measured back
/// from the last row.
pub fn compute_metrics(rows: &[MetricsInput], final_window: f64, lambda: f64) -> RunMetrics {
    let t_end = rows.last().map_or(0.0, |r| r.t);
    let tail = || rows.iter().filter(move |r| r.t > t_end - final_window - 1e-9);
    RunMetrics {
        bias_rmse: rms(rows.iter().map(|r| r.bias_err)),
        loc_rmse: rms(rows.iter().map(|r| r.loc_err)),
        final_bias_err: rms(tail().map(|r| r.bias_err)),
        final_loc_err: rms(tail().map(|r| r.loc_err)),
        convergence_time: rows.iter().find(|r| r.trace_bias < lambda).map(|r| r.t),
    }
}

pub fn record_metrics(record: &RunRecord, final_window: f64, lambda: f64) -> RunMetrics {
    let rows: Vec<MetricsInput> = record.rows.iter().map(MetricsInput::from).collect();
    compute_metrics(&rows, final_window, lambda)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Ok(RunMetrics),
    Failed(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub runs: Vec<(usize, RunStatus)>,
    pub bias_rmse: MeanStd,
    pub loc_rmse: MeanStd,
    pub final_bias_err: MeanStd,
    pub final_loc_err: MeanStd,
    pub failed: usize,
}

impl Summary {
    pub fn new(runs: Vec<(usize, RunStatus)>) -> Self {
        let ok: Vec<RunMetrics> = runs
            .iter()
            .filter_map(|(_, s)| match s {
                RunStatus::Ok(m) => Some(*m),
                RunStatus::Failed(_) => None,
            })
            .collect();
        let stat = |f: fn(&RunMetrics) -> f64| MeanStd::of(&ok.iter().map(f).collect::<Vec<_>>());
        Self {
            bias_rmse: stat(|m| m.bias_rmse),
            loc_rmse: stat(|m| m.loc_rmse),
            final_bias_err: stat(|m| m.final_bias_err),
            final_loc_err: stat(|m| m.final_loc_err),
            failed: runs.len() - ok.len(),
            runs,
        }
    }

    pub fn metrics(&self, run_index: usize) -> Option<&RunMetrics> {
        self.runs.iter().find_map(|(i, s)| match s {
            RunStatus::Ok(m) if *i == run_index => Some(m),
            _ => None,
        })
    }
}
