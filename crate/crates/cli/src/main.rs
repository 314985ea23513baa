mod params;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::BoolishValueParser;
use clap::{ArgAction, Parser, Subcommand};
use log::info;
use mqa_core::harness::bench::{budget_monotonicity_violations, render_bench_csv};
use mqa_core::harness::{
    generate_poisson, generate_synthetic, load_checkins, parse_sweep, prediction_errors, read_workload, render_report, run_bench, run_simulation,
    write_workload, AdaptiveMode, ArrivalStream, BenchSpec, CheckinRole, PoissonSpec, PredictionMode, ReportFormat, SimOptions,
};
use mqa_core::solvers::SolverKind;
use mqa_core::{Error, Result, SimConfig};

use params::Params;

#[derive(Debug, Parser)]
#[command(name = "mqa", version, about = "Budget-constrained spatial task assignment over multiple time instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the resolved parameters as TOML.
    Config {
        #[command(flatten)]
        params: Params,
    },
    /// Generate a synthetic workload as JSON lines.
    Gen {
        #[command(flatten)]
        params: Params,
        /// Mean arrivals per grid cell and instance; switches to per-cell
        /// Poisson arrivals.
        #[arg(long)]
        rate: Option<f64>,
        /// Random-walk volatility of the per-cell rates (with --rate).
        #[arg(long, default_value_t = 0.0)]
        walk: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate all instances and write the per-instance report.
    Run {
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long, default_value = "greedy")]
        solver: SolverKind,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
    },
    /// Sweep one parameter over several seeds and solvers.
    Bench {
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        opts: RunOpts,
        /// Axis and values, e.g. `B=100,200,300`.
        #[arg(long)]
        vary: String,
        #[arg(long, value_delimiter = ',', default_value = "greedy,dnc,random")]
        solvers: Vec<SolverKind>,
        /// Seeds per cell, counting up from --seed.
        #[arg(long, default_value_t = 5)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Fail when a solver's mean quality decreases along a budget sweep.
        #[arg(long)]
        check_monotone: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score grid forecasts against actual arrivals for the windows in --w
    /// (default 1..5).
    PredictEval {
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
    },
}

#[derive(Debug, Clone, clap::Args)]
struct Source {
    /// JSON-lines workload; generated from the parameters when absent.
    #[arg(long, conflicts_with_all = ["worker_checkins", "task_checkins"])]
    workload: Option<PathBuf>,
    /// Check-in CSV (user_id, latitude, longitude, unix_time) supplying workers.
    #[arg(long, requires = "task_checkins")]
    worker_checkins: Option<PathBuf>,
    /// Check-in CSV supplying tasks.
    #[arg(long, requires = "worker_checkins")]
    task_checkins: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
struct RunOpts {
    /// `on`/`grid`, `oracle` or `off`.
    #[arg(long, default_value = "on")]
    prediction: PredictionMode,
    /// `on`/`fast`, `exact` or `off`.
    #[arg(long, default_value = "off")]
    adaptive: AdaptiveMode,
    #[arg(long, default_value = "on", action = ArgAction::Set, value_parser = BoolishValueParser::new())]
    pruning: bool,
    /// Record solver wall time; `off` makes reports byte-reproducible.
    #[arg(long, default_value = "on", action = ArgAction::Set, value_parser = BoolishValueParser::new())]
    timing: bool,
}

impl RunOpts {
    fn sim_options(&self) -> SimOptions {
        SimOptions {
            prediction: self.prediction,
            adaptive: self.adaptive,
            pruning: self.pruning,
            timing: self.timing,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MQA_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Config { params } => {
            let text = toml::to_string(&params.resolve()?).map_err(|e| Error::Config(e.to_string()))?;
            emit(None, text.as_bytes())
        }
        Command::Gen { params, rate, walk, out } => {
            let config = params.resolve()?;
            let stream = match rate {
                None => generate_synthetic(&config, config.seed)?,
                Some(rate) => {
                    let spec = PoissonSpec {
                        gamma: config.gamma,
                        worker_rate: rate,
                        task_rate: rate,
                        walk,
                    };
                    generate_poisson(&config, &spec, config.seed)?
                }
            };
            let mut buf = Vec::new();
            write_workload(&stream, &mut buf)?;
            info!("generated {} workers and {} tasks", stream.num_workers(), stream.num_tasks());
            emit(out.as_deref(), &buf)
        }
        Command::Run {
            params,
            source,
            opts,
            solver,
            out,
            format,
        } => {
            let config = params.resolve()?;
            let stream = load_stream(&source, &params, &config)?;
            let run = run_simulation(&stream, solver, &config, &opts.sim_options())?;
            info!("{solver}: total quality {:.3} over {} instances", run.total_quality(), run.metrics.len());
            emit(out.as_deref(), render_report(&run.metrics, format)?.as_bytes())
        }
        Command::Bench {
            params,
            opts,
            vary,
            solvers,
            reps,
            jobs,
            check_monotone,
            out,
        } => {
            let base = params.resolve()?;
            let (axis, values) = parse_sweep(&vary)?;
            let spec = BenchSpec {
                seeds: (0..reps.max(1)).map(|k| base.seed.wrapping_add(k)).collect(),
                base,
                axis,
                values,
                solvers,
                options: opts.sim_options(),
                jobs,
            };
            let rows = run_bench(&spec)?;
            emit(out.as_deref(), render_bench_csv(&rows)?.as_bytes())?;
            if check_monotone {
                let bad = budget_monotonicity_violations(&rows);
                if !bad.is_empty() {
                    return Err(Error::Config(format!("quality decreases with budget: {}", bad.join("; "))));
                }
            }
            Ok(())
        }
        Command::PredictEval { params, source, out, format } => {
            let windows = params.windows()?.unwrap_or_else(|| (1..=5).collect());
            let config = Params { w: None, ..params.clone() }.resolve()?;
            let stream = load_stream(&source, &params, &config)?;
            let mut rows = Vec::new();
            for w in windows {
                rows.extend(prediction_errors(&stream, config.gamma, w));
            }
            let text = match format {
                ReportFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
                ReportFormat::Csv => {
                    let mut wtr = csv::Writer::from_writer(Vec::new());
                    if rows.is_empty() {
                        wtr.write_record(["window", "instance", "rel_err_workers", "rel_err_tasks"])?;
                    }
                    for r in &rows {
                        wtr.serialize(r)?;
                    }
                    String::from_utf8(wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv output is utf-8")
                }
            };
            emit(out.as_deref(), text.as_bytes())
        }
    }
}

/// The workload file, the check-in pair, or a synthetic stream from `config`.
fn load_stream(source: &Source, params: &Params, config: &SimConfig) -> Result<ArrivalStream> {
    if let Some(path) = &source.workload {
        let file = File::open(path)?;
        return read_workload(BufReader::new(file), config, params.instances.unwrap_or(1));
    }
    if let (Some(wp), Some(tp)) = (&source.worker_checkins, &source.task_checkins) {
        let workers = load_checkins(wp, CheckinRole::Worker, config.instances, config, config.seed)?;
        let tasks = load_checkins(tp, CheckinRole::Task, config.instances, config, config.seed.wrapping_add(1))?;
        info!("skipped {} malformed check-in rows", workers.skipped + tasks.skipped);
        return Ok(workers.stream.with_tasks_of(tasks.stream));
    }
    generate_synthetic(config, config.seed)
}

/// Writes to `out`, or to stdout when absent.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
