//! Parameter sweeps over seeds, axis values and solvers.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::solvers::SolverKind;

use super::sim::{run_simulation, SimOptions};
use super::workload::generate_synthetic;

/// A configuration parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Budget,
    UnitPrice,
    Window,
    Gamma,
    Delta,
    Tasks,
    Workers,
    Instances,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Budget => "B",
            Self::UnitPrice => "C",
            Self::Window => "w",
            Self::Gamma => "gamma",
            Self::Delta => "delta",
            Self::Tasks => "m",
            Self::Workers => "n",
            Self::Instances => "R",
        }
    }

    pub fn apply(&self, config: &mut SimConfig, value: f64) {
        let count = value.round().max(0.0) as usize;
        match self {
            Self::Budget => config.budget = value,
            Self::UnitPrice => config.unit_price = value,
            Self::Window => config.window = count,
            Self::Gamma => config.gamma = count,
            Self::Delta => config.delta = value,
            Self::Tasks => config.tasks = count,
            Self::Workers => config.workers = count,
            Self::Instances => config.instances = count,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "B" | "budget" => Self::Budget,
            "C" | "unit_price" => Self::UnitPrice,
            "w" | "window" => Self::Window,
            "gamma" => Self::Gamma,
            "delta" => Self::Delta,
            "m" | "tasks" => Self::Tasks,
            "n" | "workers" => Self::Workers,
            "R" | "instances" => Self::Instances,
            other => return Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        })
    }
}

/// Parses `NAME=v1,v2,...`.
pub fn parse_sweep(text: &str) -> Result<(Axis, Vec<f64>)> {
    let (name, values) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("sweep {text:?} must look like NAME=v1,v2")))?;
    let axis: Axis = name.trim().parse()?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad sweep value {v:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    Ok((axis, values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub base: SimConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub seeds: Vec<u64>,
    pub options: SimOptions,
    pub jobs: usize,
}

/// Mean and sample standard deviation over seeds for one (value, solver).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub axis: String,
    pub value: f64,
    pub solver: String,
    pub runs: usize,
    pub quality_mean: f64,
    pub quality_std: f64,
    pub wall_ms_mean: f64,
    pub wall_ms_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

type QualityCost = (f64, f64);

/// Runs every (value, solver, seed) combination and aggregates per
/// (value, solver). Results do not depend on `jobs`.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>> {
    let mut jobs = Vec::new();
    for (vi, &value) in spec.values.iter().enumerate() {
        for (si, &solver) in spec.solvers.iter().enumerate() {
            for &seed in &spec.seeds {
                jobs.push((vi, si, value, solver, seed));
            }
        }
    }
    let results: Mutex<Vec<Option<Result<QualityCost>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let work = || loop {
        let k = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(_, _, value, solver, seed)) = jobs.get(k) else {
            break;
        };
        let outcome = (|| {
            let mut config = spec.base.clone();
            spec.axis.apply(&mut config, value);
            config.seed = seed;
            let stream = generate_synthetic(&config, seed)?;
            let run = run_simulation(&stream, solver, &config, &spec.options)?;
            let wall = run.metrics.iter().map(|m| m.wall_ms).sum();
            Ok((run.total_quality(), wall))
        })();
        results.lock().expect("no poisoned lock")[k] = Some(outcome);
    };
    std::thread::scope(|s| {
        for _ in 1..spec.jobs.max(1) {
            s.spawn(work);
        }
        work();
    });
    let results = results.into_inner().expect("no poisoned lock");
    let mut rows = Vec::new();
    for (vi, &value) in spec.values.iter().enumerate() {
        for (si, &solver) in spec.solvers.iter().enumerate() {
            let (mut q, mut t) = (Vec::new(), Vec::new());
            for (job, res) in jobs.iter().zip(&results) {
                if job.0 == vi && job.1 == si {
                    let (quality, wall) = res.as_ref().expect("job ran").as_ref().map_err(|e| Error::Config(e.to_string()))?;
                    q.push(*quality);
                    t.push(*wall);
                }
            }
            let (quality_mean, quality_std) = mean_std(&q);
            let (wall_ms_mean, wall_ms_std) = mean_std(&t);
            rows.push(BenchRow {
                axis: spec.axis.name().to_string(),
                value,
                solver: solver.name().to_string(),
                runs: q.len(),
                quality_mean,
                quality_std,
                wall_ms_mean,
                wall_ms_std,
            });
        }
    }
    Ok(rows)
}

/// Solvers whose mean quality drops as the budget grows.
pub fn budget_monotonicity_violations(rows: &[BenchRow]) -> Vec<String> {
    let mut out = Vec::new();
    let mut solvers: Vec<&str> = rows.iter().filter(|r| r.axis == "B").map(|r| r.solver.as_str()).collect();
    solvers.dedup();
    for s in solvers {
        let mut series: Vec<&BenchRow> = rows.iter().filter(|r| r.axis == "B" && r.solver == s).collect();
        series.sort_by(|a, b| a.value.total_cmp(&b.value));
        for w in series.windows(2) {
            if w[1].quality_mean + 1e-9 < w[0].quality_mean {
                out.push(format!(
                    "{s}: quality {} at B={} below {} at B={}",
                    w[1].quality_mean, w[1].value, w[0].quality_mean, w[0].value
                ));
            }
        }
    }
    out
}

pub fn render_bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "axis",
            "value",
            "solver",
            "runs",
            "quality_mean",
            "quality_std",
            "wall_ms_mean",
            "wall_ms_std",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sim::PredictionMode;

    #[test]
    fn sweep_parsing() {
        let (axis, values) = parse_sweep("B=100,200,300").unwrap();
        assert_eq!((axis, values), (Axis::Budget, vec![100.0, 200.0, 300.0]));
        assert!(parse_sweep("Q=1").is_err());
        assert!(parse_sweep("B").is_err());
        assert!(parse_sweep("B=x").is_err());
    }

    #[test]
    fn counts_and_job_independence() {
        let base = SimConfig {
            workers: 12,
            tasks: 12,
            instances: 2,
            ..SimConfig::default()
        };
        let mut spec = BenchSpec {
            base,
            axis: Axis::Budget,
            values: vec![5.0, 10.0, 20.0],
            solvers: vec![SolverKind::Greedy, SolverKind::Random],
            seeds: (0..5).collect(),
            options: SimOptions {
                prediction: PredictionMode::Off,
                timing: false,
                ..SimOptions::default()
            },
            jobs: 1,
        };
        let rows = run_bench(&spec).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.runs == 5));
        spec.jobs = 4;
        assert_eq!(run_bench(&spec).unwrap(), rows);
        let text = render_bench_csv(&rows).unwrap();
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn mean_and_std() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
