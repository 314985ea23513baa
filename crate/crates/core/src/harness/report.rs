//! Per-instance metrics and their CSV / JSON reports.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one simulated instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub instance: usize,
    pub quality: f64,
    pub cost: f64,
    /// Solver wall time; zero when timing is disabled.
    pub wall_ms: f64,
    pub rel_err_workers: f64,
    pub rel_err_tasks: f64,
    pub n_available_w: usize,
    pub n_available_t: usize,
    pub n_assigned: usize,
    pub n_expired: usize,
}

/// Totals over all instances; wall time and errors are averaged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub quality: f64,
    pub cost: f64,
    pub wall_ms: f64,
    pub rel_err_workers: f64,
    pub rel_err_tasks: f64,
    pub n_available_w: usize,
    pub n_available_t: usize,
    pub n_assigned: usize,
    pub n_expired: usize,
}

impl Summary {
    pub fn of(metrics: &[InstanceMetrics]) -> Self {
        let mut s = Summary::default();
        for m in metrics {
            s.quality += m.quality;
            s.cost += m.cost;
            s.wall_ms += m.wall_ms;
            s.rel_err_workers += m.rel_err_workers;
            s.rel_err_tasks += m.rel_err_tasks;
            s.n_available_w += m.n_available_w;
            s.n_available_t += m.n_available_t;
            s.n_assigned += m.n_assigned;
            s.n_expired += m.n_expired;
        }
        if !metrics.is_empty() {
            let n = metrics.len() as f64;
            s.wall_ms /= n;
            s.rel_err_workers /= n;
            s.rel_err_tasks /= n;
        }
        s
    }
}

/// `|est - act| / act`, with an empty actual count giving 0 for an empty
/// estimate and 1 otherwise.
pub fn relative_error(est: u32, act: u32) -> f64 {
    if act == 0 {
        if est == 0 {
            0.0
        } else {
            1.0
        }
    } else {
        (f64::from(est) - f64::from(act)).abs() / f64::from(act)
    }
}

/// Mean relative error over all cells.
pub fn cell_relative_error(est: &[u32], act: &[u32]) -> f64 {
    assert_eq!(est.len(), act.len(), "cell counts must align");
    if est.is_empty() {
        return 0.0;
    }
    est.iter().zip(act).map(|(&e, &a)| relative_error(e, a)).sum::<f64>() / est.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Serialize)]
struct CsvRow {
    instance: String,
    quality: f64,
    cost: f64,
    wall_ms: f64,
    rel_err_workers: f64,
    rel_err_tasks: f64,
    n_available_w: usize,
    n_available_t: usize,
    n_assigned: usize,
    n_expired: usize,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "instance",
    "quality",
    "cost",
    "wall_ms",
    "rel_err_workers",
    "rel_err_tasks",
    "n_available_w",
    "n_available_t",
    "n_assigned",
    "n_expired",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub instances: Vec<InstanceMetrics>,
    pub summary: Summary,
}

fn render_csv(metrics: &[InstanceMetrics]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    if !metrics.is_empty() {
        for m in metrics {
            w.serialize(CsvRow {
                instance: m.instance.to_string(),
                quality: m.quality,
                cost: m.cost,
                wall_ms: m.wall_ms,
                rel_err_workers: m.rel_err_workers,
                rel_err_tasks: m.rel_err_tasks,
                n_available_w: m.n_available_w,
                n_available_t: m.n_available_t,
                n_assigned: m.n_assigned,
                n_expired: m.n_expired,
            })?;
        }
        let s = Summary::of(metrics);
        w.serialize(CsvRow {
            instance: "TOTAL".into(),
            quality: s.quality,
            cost: s.cost,
            wall_ms: s.wall_ms,
            rel_err_workers: s.rel_err_workers,
            rel_err_tasks: s.rel_err_tasks,
            n_available_w: s.n_available_w,
            n_available_t: s.n_available_t,
            n_assigned: s.n_assigned,
            n_expired: s.n_expired,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// The report as text. An empty metric list gives a header-only CSV.
pub fn render_report(metrics: &[InstanceMetrics], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => render_csv(metrics),
        ReportFormat::Json => {
            let report = JsonReport {
                instances: metrics.to_vec(),
                summary: Summary::of(metrics),
            };
            Ok(serde_json::to_string_pretty(&report)? + "\n")
        }
    }
}

pub fn emit_report(metrics: &[InstanceMetrics], format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(metrics, format)?)?;
    Ok(())
}

pub fn parse_json_report(text: &str) -> Result<JsonReport> {
    Ok(serde_json::from_str(text)?)
}
