use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::metrics::{compute_metrics, MeanStd, MetricsInput, RunRecord, RunStatus, Summary};
use crate::gp::TrajectorySegment;
use crate::{Error, Result};

pub const RUN_HEADER: [&str; 8] = ["t", "ex", "ey", "ez", "bias_err", "loc_err", "trace_bias", "trace_pos"];
pub const TRAJECTORY_HEADER: [&str; 17] = [
    "t", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az", "qw", "qx", "qy", "qz", "wx", "wy", "wz",
];
pub const SUMMARY_HEADER: [&str; 7] = [
    "run",
    "status",
    "bias_rmse",
    "loc_rmse",
    "final_bias_err",
    "final_loc_err",
    "convergence_time",
];

pub fn run_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("run_{k}.csv"))
}

pub fn trajectory_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("trajectory_{k}.csv"))
}

pub fn summary_path(dir: &Path) -> PathBuf {
    dir.join("summary.csv")
}

/// Shortest decimal that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(header).map_err(&err)?;
    for row in rows {
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_run_csv(path: &Path, record: &RunRecord) -> Result<()> {
    write_rows(
        path,
        &RUN_HEADER,
        record.rows.iter().map(|r| {
            let e = r.position_error();
            vec![
                num(r.t),
                num(e.x),
                num(e.y),
                num(e.z),
                num(r.bias_error()),
                num(r.localization_error()),
                num(r.trace_bias),
                num(r.trace_position),
            ]
        }),
    )
}

pub fn write_trajectory_csv(path: &Path, traj: &TrajectorySegment) -> Result<()> {
    write_rows(
        path,
        &TRAJECTORY_HEADER,
        traj.samples().iter().map(|s| {
            let q = s.orientation.to_quaternion();
            std::iter::once(s.t)
                .chain(s.position.iter().copied())
                .chain(s.velocity.iter().copied())
                .chain(s.acceleration.iter().copied())
                .chain(q)
                .chain(s.angular_velocity.iter().copied())
                .map(num)
                .collect()
        }),
    )
}

pub fn write_summary_csv(path: &Path, summary: &Summary) -> Result<()> {
    let mut rows = Vec::new();
    for (k, status) in &summary.runs {
        rows.push(match status {
            RunStatus::Ok(m) => vec![
                k.to_string(),
                "ok".into(),
                num(m.bias_rmse),
                num(m.loc_rmse),
                num(m.final_bias_err),
                num(m.final_loc_err),
                m.convergence_time.map(num).unwrap_or_default(),
            ],
            RunStatus::Failed(reason) => {
                let mut row = vec![k.to_string(), format!("failed: {reason}")];
                row.resize(SUMMARY_HEADER.len(), String::new());
                row
            }
        });
    }
    let stats = [
        summary.bias_rmse,
        summary.loc_rmse,
        summary.final_bias_err,
        summary.final_loc_err,
    ];
    for (label, pick) in [("mean", (|s: &MeanStd| s.mean) as fn(&MeanStd) -> f64), ("std", |s| s.std)] {
        let mut row = vec![label.to_string(), String::new()];
        row.extend(stats.iter().map(|s| num(pick(s))));
        row.push(String::new());
        rows.push(row);
    }
    let mut attrition = vec![
        "attrition".to_string(),
        format!("{}/{}", summary.failed, summary.runs.len()),
    ];
    attrition.resize(SUMMARY_HEADER.len(), String::new());
    rows.push(attrition);
    write_rows(path, &SUMMARY_HEADER, rows)
}

/// Writes `run_<k>.csv` and `trajectory_<k>.csv` per record plus
/// `summary.csv` into `out_dir`, creating it if needed.
pub fn emit_csv(records: &[RunRecord], summary: &Summary, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    records.par_iter().try_for_each(|r| {
        write_run_csv(&run_path(out_dir, r.run_index), r)?;
        write_trajectory_csv(&trajectory_path(out_dir, r.run_index), &r.trajectory)
    })?;
    write_summary_csv(&summary_path(out_dir), summary)
}

fn read_numeric(path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let err = csv_err(path);
    let mut reader = csv::Reader::from_path(path).map_err(&err)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(&err)?;
        if rec.len() != width {
            return Err(Error::Config(format!(
                "{}: expected {width} columns, found {}",
                path.display(),
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        out.push(row);
    }
    Ok(out)
}

/// Reads back the columns of a run CSV that the metrics depend on.
pub fn read_run_csv(path: &Path) -> Result<Vec<MetricsInput>> {
    Ok(read_numeric(path, RUN_HEADER.len())?
        .into_iter()
        .map(|r| MetricsInput {
            t: r[0],
            bias_err: r[4],
            loc_err: r[5],
            trace_bias: r[6],
        })
        .collect())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<[f64; 17]>> {
    Ok(read_numeric(path, TRAJECTORY_HEADER.len())?
        .into_iter()
        .map(|r| r.try_into().expect("width checked"))
        .collect())
}

/// Recomputes the summary of an output directory from its run CSVs. Runs
/// listed as failed in an existing `summary.csv` are carried over.
pub fn summarize_dir(dir: &Path, final_window: f64, lambda: f64) -> Result<Summary> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut runs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name();
        let Some(k) = name
            .to_str()
            .and_then(|n| n.strip_prefix("run_")?.strip_suffix(".csv")?.parse::<usize>().ok())
        else {
            continue;
        };
        let rows = read_run_csv(&entry.path())?;
        runs.push((k, RunStatus::Ok(compute_metrics(&rows, final_window, lambda))));
    }
    let summary = summary_path(dir);
    if summary.exists() {
        let err = csv_err(&summary);
        let mut reader = csv::Reader::from_path(&summary).map_err(&err)?;
        for rec in reader.records() {
            let rec = rec.map_err(&err)?;
            if let (Some(k), Some(reason)) = (
                rec.get(0).and_then(|k| k.parse::<usize>().ok()),
                rec.get(1).and_then(|s| s.strip_prefix("failed: ")),
            ) {
                runs.push((k, RunStatus::Failed(reason.to_string())));
            }
        }
    }
    runs.sort_by_key(|(k, _)| *k);
    Ok(Summary::new(runs))
}
