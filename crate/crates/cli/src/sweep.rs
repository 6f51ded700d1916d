//! Cartesian parameter sweeps over `sweep.<key> = v1, v2, ...` entries.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{Entry, RawConfig, RunConfig};
use crate::error::{exit, CliError, CliResult};
use crate::output::{opt, write_atomic, Csv};
use crate::run::{output_dir, run_to_dir, RunSummary, SUMMARY_FILE};

pub const CONFIG_FILE: &str = "config.txt";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const WORKERS_ENV: &str = "BERGER_FLOW_WORKERS";

/// One expanded sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    /// `(key, value)` for every swept key, in key order.
    pub assignment: Vec<(String, String)>,
    pub config: RunConfig,
}

impl SweepPoint {
    pub fn dir_name(&self) -> String {
        format!("point_{:04}", self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Done,
    Resumed,
    Failed { code: i32, message: String },
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub status: PointStatus,
    pub summary: Option<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub results: Vec<PointResult>,
}

impl SweepOutcome {
    pub fn any_succeeded(&self) -> bool {
        self.results.iter().any(|r| !matches!(r.status, PointStatus::Failed { .. }))
    }
}

/// Expands the sweep keys of `raw`; the last key varies fastest.
///
/// `sweep.a+b = 1:10, 2:20` links keys so they vary together.
pub fn expand(raw: &RawConfig) -> CliResult<Vec<SweepPoint>> {
    let mut base = raw.clone();
    // (target keys, line, tuples of values)
    let mut axes: Vec<(Vec<String>, usize, Vec<Vec<String>>)> = Vec::new();
    for (key, entry) in &raw.entries {
        let Some(spec) = key.strip_prefix("sweep.") else {
            continue;
        };
        base.entries.remove(key);
        let err = |message: String| CliError::ConfigLine {
            path: raw.source.clone(),
            line: entry.line,
            message,
        };
        let targets: Vec<String> = spec.split('+').map(str::to_string).collect();
        let tuples: Vec<Vec<String>> = entry
            .value
            .split(',')
            .map(|v| v.split(':').map(|x| x.trim().to_string()).collect())
            .collect();
        let malformed = targets.iter().any(String::is_empty)
            || tuples
                .iter()
                .any(|t: &Vec<String>| t.len() != targets.len() || t.iter().any(String::is_empty));
        if malformed {
            return Err(err(format!(
                "'{key}' needs target keys and a comma-separated list of {}-part values",
                targets.len()
            )));
        }
        for t in &targets {
            if raw.entries.contains_key(t) {
                return Err(err(format!("'{t}' is both set and swept")));
            }
        }
        axes.push((targets, entry.line, tuples));
    }

    let total: usize = axes.iter().map(|a| a.2.len()).product();
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut rest = index;
        let mut chosen = vec![Vec::new(); axes.len()];
        let mut point_raw = base.clone();
        for (slot, (targets, line, tuples)) in axes.iter().enumerate().rev() {
            let tuple = &tuples[rest % tuples.len()];
            rest /= tuples.len();
            for (key, value) in targets.iter().zip(tuple) {
                chosen[slot].push((key.clone(), value.clone()));
                point_raw.entries.insert(
                    key.clone(),
                    Entry {
                        line: *line,
                        value: value.clone(),
                    },
                );
            }
        }
        points.push(SweepPoint {
            index,
            assignment: chosen.into_iter().flatten().collect(),
            config: RunConfig::from_raw(&point_raw)?,
        });
    }
    Ok(points)
}

/// Worker count: the flag, then the environment, then rayon's default.
pub fn resolve_workers(flag: Option<usize>) -> CliResult<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn point_text(point: &SweepPoint) -> String {
    let mut cfg = point.config.clone();
    cfg.output_dir = None;
    cfg.to_text()
}

fn read_summary(dir: &Path) -> Option<RunSummary> {
    let text = std::fs::read_to_string(dir.join(SUMMARY_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

fn run_point(point: &SweepPoint, root: &Path) -> PointResult {
    let dir = root.join(point.dir_name());
    let text = point_text(point);
    let finished = std::fs::read_to_string(dir.join(CONFIG_FILE)).is_ok_and(|t| t == text);
    if finished {
        if let Some(summary) = read_summary(&dir) {
            return PointResult {
                point: point.clone(),
                status: PointStatus::Resumed,
                summary: Some(summary),
            };
        }
    }
    let attempt = std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::io(&dir, e))
        .and_then(|_| write_atomic(&dir.join(CONFIG_FILE), text.as_bytes()))
        .and_then(|_| run_to_dir(&point.config, &dir));
    match attempt {
        Ok(outcome) => PointResult {
            point: point.clone(),
            status: PointStatus::Done,
            summary: Some(outcome.summary),
        },
        Err(e) => PointResult {
            point: point.clone(),
            status: PointStatus::Failed {
                code: e.exit_code(),
                message: e.to_string(),
            },
            summary: read_summary(&dir),
        },
    }
}

fn manifest(results: &[PointResult]) -> String {
    let keys: Vec<&str> = results
        .first()
        .map(|r| r.point.assignment.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let mut head = vec!["point", "status", "exit_code"];
    head.extend(keys.iter().copied());
    head.extend(["t_hat", "stop_reason", "locality", "message"]);
    let mut csv = Csv::new(&head);
    for r in results {
        let (status, code, message) = match &r.status {
            PointStatus::Done => ("done", exit::OK, String::new()),
            PointStatus::Resumed => ("resumed", exit::OK, String::new()),
            PointStatus::Failed { code, message } => ("failed", *code, message.clone()),
        };
        let mut row = vec![r.point.dir_name(), status.to_string(), code.to_string()];
        row.extend(r.point.assignment.iter().map(|(_, v)| v.clone()));
        let s = r.summary.as_ref();
        row.push(opt(s.and_then(|s| s.t_hat)));
        row.push(s.map(|s| s.stop_reason.as_str().to_string()).unwrap_or_default());
        row.push(s.map(|s| s.singularity_locality.as_str().to_string()).unwrap_or_default());
        row.push(format!("\"{}\"", message.replace('"', "'")));
        csv.row(&row);
    }
    csv.into_string()
}

/// Runs every point of the sweep in `root`, skipping finished points.
pub fn run_sweep(raw: &RawConfig, root: &Path, workers: usize) -> CliResult<SweepOutcome> {
    let points = expand(raw)?;
    std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let results: Vec<PointResult> = pool.install(|| points.par_iter().map(|p| run_point(p, root)).collect());
    write_atomic(&root.join(MANIFEST_FILE), manifest(&results).as_bytes())?;
    Ok(SweepOutcome {
        dir: root.to_path_buf(),
        results,
    })
}

pub fn cmd_sweep(config: &Path, workers: Option<usize>, out: Option<&Path>) -> CliResult<SweepOutcome> {
    let raw = RawConfig::read(config)?;
    let workers = resolve_workers(workers)?;
    // validates every point before any work starts
    let first = expand(&raw)?;
    let root = output_dir(&first[0].config, out);
    let outcome = run_sweep(&raw, &root, workers)?;
    if outcome.any_succeeded() {
        return Ok(outcome);
    }
    let first_failure = outcome.results.iter().find_map(|r| match &r.status {
        PointStatus::Failed { code, message } => Some((*code, message.clone())),
        _ => None,
    });
    Err(match first_failure {
        Some((exit::VALIDATION, m)) => CliError::Validation(format!("every sweep point failed; first: {m}")),
        Some((exit::RESOLUTION, m)) => CliError::Resolution(format!("every sweep point failed; first: {m}")),
        Some((_, m)) => CliError::Halt(format!("every sweep point failed; first: {m}")),
        None => CliError::Config("sweep has no points".into()),
    })
}
