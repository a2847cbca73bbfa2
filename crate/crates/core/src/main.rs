use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imu_ipp::planner::realize_waypoints;
use imu_ipp::sim::{
    emit_csv, plan_once, run_experiment, summarize_dir, write_trajectory_csv, ExperimentConfig, InterpolatorKind,
    PlannerKind, Summary,
};
use imu_ipp::Error;

#[derive(Parser)]
#[command(name = "imu-ipp", version, about = "Informative path planning for IMU bias estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fly the prior sweep of one run and print a single plan from there.
    Plan(Common),
    /// Run the Monte Carlo experiment and write CSVs.
    Run(Common),
    /// Run two paired arms and compare their summaries.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Planner of the baseline arm (defaults to the main arm's).
        #[arg(long)]
        baseline_planner: Option<PlannerKind>,
        /// Interpolator of the baseline arm (defaults to the main arm's).
        #[arg(long)]
        baseline_interp: Option<InterpolatorKind>,
    },
    /// Recompute and print the summary of an output directory.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    planner: Option<PlannerKind>,
    #[arg(long)]
    interp: Option<InterpolatorKind>,
    /// 50 runs of 600 s instead of the configured size.
    #[arg(long)]
    full_scale: bool,
}

impl Common {
    fn config(&self) -> imu_ipp::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(other.to_string()),
            })?,
            None => ExperimentConfig::default(),
        };
        if self.full_scale {
            c.experiment.num_runs = 50;
            c.experiment.duration = 600.0;
        }
        if let Some(seed) = self.seed {
            c.experiment.seed = seed;
        }
        if let Some(runs) = self.runs {
            c.experiment.num_runs = runs;
        }
        if let Some(p) = self.planner {
            c.experiment.planner = p;
        }
        if let Some(i) = self.interp {
            c.experiment.interpolator = i;
        }
        c.validate()?;
        Ok(c)
    }
}

fn arm_name(c: &ExperimentConfig) -> String {
    let interp = match c.experiment.interpolator {
        InterpolatorKind::Gp => "gp",
        InterpolatorKind::Minsnap => "minsnap",
    };
    format!("{}_{interp}", c.experiment.planner.name())
}

fn print_summary(label: &str, s: &Summary) {
    println!("{label}");
    println!("  runs            {} ({} failed)", s.runs.len(), s.failed);
    for (name, m) in [
        ("bias_rmse", s.bias_rmse),
        ("loc_rmse", s.loc_rmse),
        ("final_bias_err", s.final_bias_err),
        ("final_loc_err", s.final_loc_err),
    ] {
        println!("  {name:<15} {:.6} +- {:.6}", m.mean, m.std);
    }
}

fn run_arm(config: &ExperimentConfig, out: &Path) -> imu_ipp::Result<Summary> {
    let result = run_experiment(config)?;
    emit_csv(&result.records, &result.summary, out)?;
    Ok(result.summary)
}

fn execute(cli: Cli) -> imu_ipp::Result<()> {
    match cli.command {
        Command::Plan(common) => {
            let config = common.config()?;
            let (start, plan) = plan_once(&config, 0)?;
            let lambda = config.planner.lambda;
            let modes = plan.branch_modes(lambda, config.experiment.planner.policy());
            println!("nodes {} branch cost {:.6e} duration {:.2} s", plan.nodes.len(), plan.cost, plan.duration());
            for (w, mode) in plan.waypoints().iter().zip(modes) {
                let p = w.pose.position;
                println!("  ({:8.3}, {:8.3}, {:8.3})  {:6.2} s  {mode:?}", p.x, p.y, p.z, w.duration);
            }
            let traj = realize_waypoints(&start, &plan.waypoints(), &config.interpolator(), config.experiment.record_rate)?;
            std::fs::create_dir_all(&common.out).map_err(|source| Error::Io {
                path: common.out.clone(),
                source,
            })?;
            write_trajectory_csv(&common.out.join("plan.csv"), &traj)?;
        }
        Command::Run(common) => {
            let config = common.config()?;
            let summary = run_arm(&config, &common.out)?;
            print_summary(&arm_name(&config), &summary);
        }
        Command::Compare {
            common,
            baseline_planner,
            baseline_interp,
        } => {
            let main = common.config()?;
            let mut baseline = main.clone();
            if let Some(p) = baseline_planner {
                baseline.experiment.planner = p;
            }
            if let Some(i) = baseline_interp {
                baseline.experiment.interpolator = i;
            }
            if arm_name(&baseline) == arm_name(&main) {
                return Err(Error::Config("baseline arm is identical to the main arm".into()));
            }
            let a = run_arm(&main, &common.out.join(arm_name(&main)))?;
            let b = run_arm(&baseline, &common.out.join(arm_name(&baseline)))?;
            print_summary(&arm_name(&main), &a);
            print_summary(&arm_name(&baseline), &b);
            let ratio = |x: f64, y: f64| if x > 0.0 { y / x } else { f64::NAN };
            println!(
                "baseline / main: bias_rmse {:.3}  loc_rmse {:.3}  final_loc_err {:.3}",
                ratio(a.bias_rmse.mean, b.bias_rmse.mean),
                ratio(a.loc_rmse.mean, b.loc_rmse.mean),
                ratio(a.final_loc_err.mean, b.final_loc_err.mean)
            );
        }
        Command::Report(common) => {
            let config = common.config()?;
            let summary = summarize_dir(&common.out, config.experiment.final_window, config.planner.lambda)?;
            print_summary(&common.out.display().to_string(), &summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
