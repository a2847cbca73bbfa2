//! Monte Carlo experiment harness: configuration, scenarios, the simulation
//! loop, metrics and CSV output.

mod config;
mod metrics;
mod output;
mod runner;
mod scenario;

pub use config::{
    ExperimentConfig, ExperimentSection, InterpolatorKind, PlannerKind, PlannerSection, ScenarioSection,
    SensorSection, TruthSection,
};
pub use metrics::{compute_metrics, record_metrics, MeanStd, MetricsInput, RecordRow, RunMetrics, RunRecord, RunStatus, Summary};
pub use output::{
    emit_csv, read_run_csv, read_trajectory_csv, run_path, summarize_dir, summary_path, trajectory_path,
    write_run_csv, write_summary_csv, write_trajectory_csv, RUN_HEADER, SUMMARY_HEADER, TRAJECTORY_HEADER,
};
pub use runner::{plan_once, run_experiment, run_single, ExperimentResult};
pub use scenario::{Scenario, SCENARIOS};
