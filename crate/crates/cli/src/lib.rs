//! Experiment driver: configuration, pipelines, artifacts and sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

pub use commands::{execute, Check, Outcome};
pub use config::{RunConfig, Subcommand};
pub use error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUT_ENV: &str = "GCF_LAB_OUT";
const DEFAULT_OUT: &str = "gcf-lab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub cell: String,
    pub status: Status,
    pub fitted: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub subcommand: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub status: Status,
    pub checks: Vec<Check>,
    pub fitted: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<CellRow>>,
}

impl Summary {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 3,
        }
    }
}

/// `GCF_LAB_OUT`, else the `out` key, else `gcf-lab-out`.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(cfg.str_or("out", DEFAULT_OUT)))
}

/// Runs the configured subcommand and writes `summary.json` plus artifacts
/// into `out`. Config errors are returned; pipeline errors end up in the
/// summary with status `error`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Summary, CliError> {
    fs::create_dir_all(out)?;
    let summary = if cfg.subcommand == Subcommand::Sweep {
        sweep(cfg, out)?
    } else {
        run_single(cfg, out)?
    };
    fs::write(out.join("summary.json"), to_json(&summary))?;
    Ok(summary)
}

fn to_json(s: &Summary) -> String {
    let mut text = serde_json::to_string_pretty(s).expect("summary serializes");
    text.push('\n');
    text
}

fn base_summary(cfg: &RunConfig) -> Summary {
    Summary {
        subcommand: cfg.subcommand.as_str().to_string(),
        version: VERSION.to_string(),
        config: cfg.values().clone(),
        status: Status::Pass,
        checks: Vec::new(),
        fitted: BTreeMap::new(),
        artifacts: Vec::new(),
        error: None,
        cells: None,
    }
}

fn run_single(cfg: &RunConfig, out: &Path) -> Result<Summary, CliError> {
    let mut summary = base_summary(cfg);
    match execute(cfg) {
        Ok(outcome) => {
            for (name, contents) in &outcome.artifacts {
                fs::write(out.join(name), contents)?;
            }
            summary.status = if outcome.passed() { Status::Pass } else { Status::Fail };
            summary.artifacts = outcome.artifacts.iter().map(|a| a.0.clone()).collect();
            summary.artifacts.sort();
            summary.checks = outcome.checks;
            summary.fitted = outcome.fitted;
        }
        Err(e @ CliError::Config(_)) => return Err(e),
        Err(e) => {
            summary.status = Status::Error;
            summary.error = Some(e.to_string());
        }
    }
    Ok(summary)
}

fn cell_dir_name(key: &str) -> String {
    key.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '=' { c } else { '_' })
        .collect()
}

fn run_cell(target: Subcommand, key: &str, values: BTreeMap<String, String>, out: &Path) -> CellRow {
    let dir = out.join("cells").join(cell_dir_name(key));
    let result = RunConfig::from_map(target, values).and_then(|cfg| run(&cfg, &dir));
    match result {
        Ok(s) => CellRow {
            cell: key.to_string(),
            status: s.status,
            fitted: s.fitted,
            error: s.error,
        },
        Err(e) => CellRow {
            cell: key.to_string(),
            status: Status::Error,
            fitted: BTreeMap::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Cells run on `workers` threads; worker k takes cells k, k + workers, ...
/// Each cell writes only below its own directory.
fn sweep(cfg: &RunConfig, out: &Path) -> Result<Summary, CliError> {
    let target = cfg.target()?;
    let cells = cfg.sweep_cells()?;
    let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = cfg.usize_or("workers", default_workers)?.clamp(1, cells.len().max(1));
    let mut rows: Vec<(usize, CellRow)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|k| {
                let cells = &cells;
                scope.spawn(move || {
                    cells
                        .iter()
                        .enumerate()
                        .skip(k)
                        .step_by(workers)
                        .map(|(i, (key, values))| (i, run_cell(target, key, values.clone(), out)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    rows.sort_by_key(|r| r.0);
    let rows: Vec<CellRow> = rows.into_iter().map(|r| r.1).collect();

    fs::write(out.join("sweep.csv"), sweep_csv(&rows))?;
    let mut summary = base_summary(cfg);
    summary.status = rows.iter().map(|r| r.status).max().unwrap_or(Status::Pass);
    summary.checks = rows
        .iter()
        .map(|r| Check {
            name: r.cell.clone(),
            passed: r.status == Status::Pass,
            detail: r.error.clone().unwrap_or_else(|| r.status.as_str().to_string()),
        })
        .collect();
    summary.fitted.insert("cells".into(), rows.len().into());
    summary.artifacts = vec!["sweep.csv".to_string()];
    summary.cells = Some(rows);
    Ok(summary)
}

/// One row per cell; columns are the union of scalar fitted values.
fn sweep_csv(rows: &[CellRow]) -> String {
    let scalar = |v: &Value| v.is_number() || v.is_string() || v.is_boolean() || v.is_null();
    let columns: BTreeSet<&String> = rows
        .iter()
        .flat_map(|r| r.fitted.iter().filter(|(_, v)| scalar(v)).map(|(k, _)| k))
        .collect();
    let mut s = String::from("cell,status");
    for c in &columns {
        s.push(',');
        s.push_str(c);
    }
    s.push_str(",error\n");
    let quote = |t: &str| {
        if t.contains(',') || t.contains('"') {
            format!("\"{}\"", t.replace('"', "\"\""))
        } else {
            t.to_string()
        }
    };
    for r in rows {
        s.push_str(&quote(&r.cell));
        s.push(',');
        s.push_str(r.status.as_str());
        for c in &columns {
            s.push(',');
            match r.fitted.get(*c) {
                Some(Value::String(t)) => s.push_str(&quote(t)),
                Some(Value::Null) | None => {}
                Some(v) => s.push_str(&v.to_string()),
            }
        }
        s.push(',');
        s.push_str(&quote(r.error.as_deref().unwrap_or("")));
        s.push('\n');
    }
    s
}
