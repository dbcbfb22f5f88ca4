//! CSV outputs of a grid run.
//!
//! Every file starts with `#` comment lines (tool version, RNG identity,
//! trajectory stride, JSON config echo) followed by a header row. Arm and
//! group indices are 1-based; pulls are counts; regret is in reward units.
//!
//! | file | columns |
//! |---|---|
//! | `trials.csv` | [`TRIALS_COLUMNS`] |
//! | `summary.csv` | [`SUMMARY_COLUMNS`] |
//! | `timings.csv` | [`TIMINGS_COLUMNS`] (seconds; not deterministic) |
//! | `trajectories.csv` | [`TRAJECTORY_COLUMNS`] |
//! | `regret_curve.csv` | [`CURVE_COLUMNS`] |
//! | `trace.csv` | [`TRACE_COLUMNS`] |

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::curve::{mean_std, regret_curves, RegretCurve};
use super::run::TrialRecord;
use crate::error::{Error, Result};
use crate::reward::RNG_IDENTITY;

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const CURVE_FILE: &str = "regret_curve.csv";
pub const TRACE_FILE: &str = "trace.csv";

pub const TRIALS_COLUMNS: &[&str] = &[
    "algorithm",
    "instance",
    "gap",
    "trial",
    "returned_group",
    "success",
    "simple_regret",
    "total_pulls",
    "terminated",
    "bounds_valid",
    "steps",
    "arm_pulls",
];

pub const SUMMARY_COLUMNS: &[&str] = &[
    "algorithm",
    "gap",
    "trials",
    "success_rate",
    "mean_pulls",
    "median_pulls",
    "std_pulls",
    "terminated_rate",
    "bounds_valid_rate",
    "mean_regret",
];

pub const TIMINGS_COLUMNS: &[&str] = &["algorithm", "instance", "trial", "wall_clock_s"];

pub const TRAJECTORY_COLUMNS: &[&str] = &[
    "algorithm",
    "instance",
    "gap",
    "trial",
    "round",
    "pulled_arm",
    "recommended_group",
    "simple_regret",
];

pub const CURVE_COLUMNS: &[&str] = &[
    "algorithm",
    "gap",
    "round",
    "mean_regret",
    "half_std",
    "trials",
];

pub const TRACE_COLUMNS: &[&str] = &[
    "instance",
    "trial",
    "epoch",
    "candidate_groups",
    "active_arms",
    "total_pulls",
];

/// One row of `trials.csv`. `arm_pulls` joins per-arm counts with `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub algorithm: String,
    pub instance: u32,
    pub gap: f64,
    pub trial: u32,
    pub returned_group: usize,
    pub success: bool,
    pub simple_regret: f64,
    pub total_pulls: u64,
    pub terminated: bool,
    pub bounds_valid: bool,
    pub steps: u64,
    pub arm_pulls: String,
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        let arm_pulls = r
            .pulls
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        Self {
            algorithm: r.algorithm.name().to_string(),
            instance: r.instance,
            gap: r.gap,
            trial: r.trial,
            returned_group: r.returned + 1,
            success: r.success,
            simple_regret: r.simple_regret,
            total_pulls: r.total_pulls,
            terminated: r.terminated,
            bounds_valid: r.bounds_valid,
            steps: r.steps,
            arm_pulls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub gap: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_pulls: f64,
    pub median_pulls: f64,
    pub std_pulls: f64,
    pub terminated_rate: f64,
    pub bounds_valid_rate: f64,
    pub mean_regret: f64,
}

#[derive(Serialize)]
struct TimingRow<'a> {
    algorithm: &'a str,
    instance: u32,
    trial: u32,
    wall_clock_s: f64,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    algorithm: &'a str,
    instance: u32,
    gap: f64,
    trial: u32,
    round: u64,
    pulled_arm: Option<usize>,
    recommended_group: usize,
    simple_regret: f64,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    algorithm: &'a str,
    gap: f64,
    round: u64,
    mean_regret: f64,
    half_std: f64,
    trials: usize,
}

#[derive(Serialize)]
struct TraceRow {
    instance: u32,
    trial: u32,
    epoch: u64,
    candidate_groups: usize,
    active_arms: usize,
    total_pulls: u64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn rate(flags: impl Iterator<Item = bool>) -> (usize, f64) {
    let (mut n, mut yes) = (0usize, 0usize);
    for f in flags {
        n += 1;
        yes += usize::from(f);
    }
    (n, yes as f64 / n as f64)
}

/// Per-(algorithm, gap) aggregates, ordered by algorithm name then gap.
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(&str, u64), Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.algorithm.as_str(), r.gap.to_bits()))
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((algorithm, gap), rows)| {
            let mut pulls: Vec<f64> = rows.iter().map(|r| r.total_pulls as f64).collect();
            pulls.sort_by(f64::total_cmp);
            let (mean_pulls, std_pulls) = mean_std(&pulls);
            let regrets: Vec<f64> = rows.iter().map(|r| r.simple_regret).collect();
            let (trials, success_rate) = rate(rows.iter().map(|r| r.success));
            SummaryRow {
                algorithm: algorithm.to_string(),
                gap: f64::from_bits(gap),
                trials,
                success_rate,
                mean_pulls,
                median_pulls: median(&pulls),
                std_pulls,
                terminated_rate: rate(rows.iter().map(|r| r.terminated)).1,
                bounds_valid_rate: rate(rows.iter().map(|r| r.bounds_valid)).1,
                mean_regret: mean_std(&regrets).0,
            }
        })
        .collect()
}

/// Creates `dir` if needed and checks that files can be written there.
pub fn check_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".maxmin-write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Comment lines opening every output file.
pub fn header(config: &ExperimentConfig) -> String {
    format!(
        "# maxmin-bandits {}\n# rng: {}\n# stride: {}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        RNG_IDENTITY,
        config.stride,
        config.echo()
    )
}

fn write_csv<T: Serialize>(
    path: &Path,
    preamble: &str,
    columns: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(preamble.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, Default)]
pub struct OutputFiles {
    pub trials: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
    pub trajectories: Option<PathBuf>,
    pub curve: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    records: &[TrialRecord],
) -> Result<OutputFiles> {
    check_output_dir(dir)?;
    let head = header(config);
    let rows: Vec<TrialRow> = records.iter().map(TrialRow::from).collect();

    let mut files = OutputFiles {
        trials: dir.join(TRIALS_FILE),
        summary: dir.join(SUMMARY_FILE),
        timings: dir.join(TIMINGS_FILE),
        ..OutputFiles::default()
    };
    write_csv(&files.trials, &head, TRIALS_COLUMNS, &rows)?;
    write_csv(&files.summary, &head, SUMMARY_COLUMNS, summarize(&rows))?;
    write_csv(
        &files.timings,
        &head,
        TIMINGS_COLUMNS,
        records.iter().map(|r| TimingRow {
            algorithm: r.algorithm.name(),
            instance: r.instance,
            trial: r.trial,
            wall_clock_s: r.wall_clock.as_secs_f64(),
        }),
    )?;

    if records.iter().any(|r| !r.trajectory.is_empty()) {
        let path = dir.join(TRAJECTORY_FILE);
        write_csv(
            &path,
            &head,
            TRAJECTORY_COLUMNS,
            records.iter().flat_map(|r| {
                r.trajectory.iter().map(move |s| TrajectoryRow {
                    algorithm: r.algorithm.name(),
                    instance: r.instance,
                    gap: r.gap,
                    trial: r.trial,
                    round: s.round,
                    pulled_arm: s.arm.map(|a| a + 1),
                    recommended_group: s.group + 1,
                    simple_regret: s.regret,
                })
            }),
        )?;
        files.trajectories = Some(path);
        let path = dir.join(CURVE_FILE);
        write_curves(&path, &head, &regret_curves(records))?;
        files.curve = Some(path);
    }

    if records.iter().any(|r| !r.trace.is_empty()) {
        let path = dir.join(TRACE_FILE);
        write_csv(
            &path,
            &head,
            TRACE_COLUMNS,
            records.iter().flat_map(|r| {
                r.trace.iter().map(move |s| TraceRow {
                    instance: r.instance,
                    trial: r.trial,
                    epoch: s.epoch,
                    candidate_groups: s.candidate_groups,
                    active_arms: s.active_arms,
                    total_pulls: s.total_pulls,
                })
            }),
        )?;
        files.trace = Some(path);
    }
    Ok(files)
}

pub fn write_curves(path: &Path, preamble: &str, curves: &[RegretCurve]) -> Result<()> {
    write_csv(
        path,
        preamble,
        CURVE_COLUMNS,
        curves.iter().flat_map(|c| {
            c.points.iter().map(move |p| CurveRow {
                algorithm: c.algorithm.name(),
                gap: c.gap,
                round: p.round,
                mean_regret: p.mean,
                half_std: p.half_std,
                trials: p.trials,
            })
        }),
    )
}

/// Reads a `trials.csv`, rejecting files whose columns differ from
/// [`TRIALS_COLUMNS`].
pub fn read_trials(path: &Path) -> Result<Vec<TrialRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != TRIALS_COLUMNS {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!(
                "unexpected columns {:?}, expected {:?}",
                found, TRIALS_COLUMNS
            ),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Writes `summary.csv` rows for an existing trial table.
pub fn write_summary(path: &Path, preamble: &str, rows: &[SummaryRow]) -> Result<()> {
    write_csv(path, preamble, SUMMARY_COLUMNS, rows)
}
