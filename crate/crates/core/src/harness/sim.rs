//! The multi-instance assignment loop.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{estimate_q_now, should_run_now, TimingInputs};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::instance::{Instance, PairModel};
use crate::model::{euclidean_distance, Assignment, Task, Worker};
use crate::prediction::{coordinate_std, generate_predicted, CellCounts, GridModel, SampleSpec};
use crate::solvers::{solve_bb, solve_dnc, solve_greedy, solve_random, BbOptions, SolveParams, SolverKind};

use super::report::{cell_relative_error, InstanceMetrics};
use super::workload::{ArrivalStream, Arrivals};

/// Source of next-instance entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionMode {
    Off,
    /// Grid forecast with kernel sampling.
    Grid,
    /// The true next arrivals, flagged as predicted.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptiveMode {
    Off,
    /// Current quality estimated from best-partner statistics.
    Fast,
    /// Current quality obtained by running the solver on current pairs.
    Exact,
}

macro_rules! parse_enum {
    ($ty:ident { $($text:literal => $variant:ident),* $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok(Self::$variant),)*
                    other => Err(Error::Config(format!(concat!("unknown ", stringify!($ty), " {:?}"), other))),
                }
            }
        }
    };
}

parse_enum!(PredictionMode { "off" => Off, "on" => Grid, "grid" => Grid, "oracle" => Oracle });
parse_enum!(AdaptiveMode { "off" => Off, "on" => Fast, "fast" => Fast, "exact" => Exact });

impl fmt::Display for PredictionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Off => "off",
            Self::Grid => "grid",
            Self::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub prediction: PredictionMode,
    pub adaptive: AdaptiveMode,
    pub pruning: bool,
    /// Record solver wall time. Disable for byte-identical reports.
    pub timing: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            prediction: PredictionMode::Grid,
            adaptive: AdaptiveMode::Off,
            pruning: true,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub metrics: Vec<InstanceMetrics>,
    /// Predicted workers and tasks constructed over the run.
    pub predicted_entities: usize,
    /// Instances where the adaptive rule deferred assignment.
    pub skipped_rounds: usize,
}

impl SimRun {
    pub fn total_quality(&self) -> f64 {
        self.metrics.iter().map(|m| m.quality).sum()
    }
}

fn solve_round(kind: SolverKind, inst: &Instance, config: &SimConfig, pruning: bool, rng: &mut ChaCha8Rng) -> Result<Assignment> {
    let params = SolveParams::new(config.budget)
        .with_delta(config.delta)
        .with_pruning(pruning)
        .pooled(inst.has_predicted());
    Ok(match kind {
        SolverKind::Greedy => solve_greedy(inst, &params).assignment,
        SolverKind::Dnc => solve_dnc(inst, &params).assignment,
        SolverKind::Random => solve_random(inst, &params, rng).assignment,
        SolverKind::Bb => solve_bb(inst, config.budget, &BbOptions::default())?.assignment,
    })
}

fn as_predicted(next: &Arrivals) -> (Vec<Worker>, Vec<Task>) {
    let workers = next
        .workers
        .iter()
        .map(|w| Worker::predicted(w.id, w.loc, w.velocity, w.arrival, [0.0; 2]))
        .collect();
    let tasks = next
        .tasks
        .iter()
        .map(|t| Task::predicted(t.id, t.loc, t.deadline, t.arrival, [0.0; 2]))
        .collect();
    (workers, tasks)
}

/// Runs the stream with the model implied by the stream (pair table or
/// geometry).
pub fn run_simulation(stream: &ArrivalStream, solver: SolverKind, config: &SimConfig, opts: &SimOptions) -> Result<SimRun> {
    let model = stream.pair_model(config);
    run_simulation_with(stream, model.as_ref(), solver, config, opts)
}

/// Per instance: rejoin workers whose trip has ended, expire overdue tasks,
/// add arrivals, predict the next instance, solve, and dispatch. Only pairs
/// between current entities are dispatched.
pub fn run_simulation_with(
    stream: &ArrivalStream,
    model: &dyn PairModel,
    solver: SolverKind,
    config: &SimConfig,
    opts: &SimOptions,
) -> Result<SimRun> {
    config.validate()?;
    let rounds = stream.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6d71_615f_7369_6d00);
    let mut grid = GridModel::new(config.gamma, config.window);
    let mut available_w: Vec<Worker> = Vec::new();
    let mut available_t: Vec<Task> = Vec::new();
    let mut busy: Vec<(usize, Worker)> = Vec::new();
    let mut forecast: Option<Vec<CellCounts>> = None;
    let mut last_assigned: Option<usize> = None;
    let (mut arrived_w, mut arrived_t, mut done_t, mut expired_t) = (0usize, 0usize, 0usize, 0usize);
    let mut run = SimRun {
        metrics: Vec::with_capacity(rounds),
        predicted_entities: 0,
        skipped_rounds: 0,
    };

    for p in 1..=rounds {
        let now = p as f64;
        let (back, still): (Vec<_>, Vec<_>) = busy.into_iter().partition(|(at, _)| *at <= p);
        busy = still;
        available_w.extend(back.into_iter().map(|(_, w)| w));
        let before = available_t.len();
        available_t.retain(|t| t.deadline >= now);
        let expired = before - available_t.len();
        expired_t += expired;

        let arrivals = stream.at(p);
        arrived_w += arrivals.workers.len();
        arrived_t += arrivals.tasks.len();
        available_w.extend(arrivals.workers.iter().cloned());
        available_t.extend(arrivals.tasks.iter().cloned());

        let (err_w, err_t) = match forecast.take() {
            Some(f) => {
                let est_w: Vec<u32> = f.iter().map(|c| c.workers).collect();
                let est_t: Vec<u32> = f.iter().map(|c| c.tasks).collect();
                let act_w = grid.histogram(arrivals.workers.iter().map(|w| w.loc));
                let act_t = grid.histogram(arrivals.tasks.iter().map(|t| t.loc));
                (cell_relative_error(&est_w, &act_w), cell_relative_error(&est_t, &act_t))
            }
            None => (0.0, 0.0),
        };
        grid.record_instance(&arrivals.workers, &arrivals.tasks);

        let (pred_w, pred_t) = if p < rounds {
            match opts.prediction {
                PredictionMode::Off => (Vec::new(), Vec::new()),
                PredictionMode::Oracle => as_predicted(stream.at(p + 1)),
                PredictionMode::Grid => {
                    let counts = grid.forecast_counts();
                    let w_locs: Vec<_> = arrivals.workers.iter().map(|w| w.loc).collect();
                    let t_locs: Vec<_> = arrivals.tasks.iter().map(|t| t.loc).collect();
                    let spec = SampleSpec {
                        arrival: now + 1.0,
                        velocity: config.velocity.mid(),
                        deadline_offset: config.deadline.mid(),
                        worker_sigma: coordinate_std(&w_locs),
                        task_sigma: coordinate_std(&t_locs),
                    };
                    let sampled = generate_predicted(&counts, &grid, &spec, &mut rng);
                    forecast = Some(counts);
                    sampled
                }
            }
        } else {
            (Vec::new(), Vec::new())
        };
        run.predicted_entities += pred_w.len() + pred_t.len();

        let (n_aw, n_at) = (available_w.len(), available_t.len());
        let workers: Vec<Worker> = available_w.iter().cloned().chain(pred_w).collect();
        let tasks: Vec<Task> = available_t.iter().cloned().chain(pred_t).collect();
        let inst = Instance::build(model, now, workers, tasks);

        let go = if opts.adaptive != AdaptiveMode::Off && p < rounds {
            let inputs = TimingInputs::from_instance(&inst, last_assigned, solver);
            let q_now = match opts.adaptive {
                AdaptiveMode::Exact => solve_round(solver, &inst.current_only(), config, opts.pruning, &mut rng)?.total_quality_mean(),
                _ => estimate_q_now(&inputs),
            };
            should_run_now(&inputs, q_now)
        } else {
            true
        };

        let start = Instant::now();
        let assignment = if go {
            solve_round(solver, &inst, config, opts.pruning, &mut rng)?
        } else {
            run.skipped_rounds += 1;
            Assignment::new()
        };
        let wall_ms = if opts.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        if go {
            last_assigned = Some(assignment.len());
        }

        for pair in assignment.pairs() {
            let wi = available_w
                .iter()
                .position(|w| w.id == pair.worker)
                .expect("assigned worker is available");
            let ti = available_t.iter().position(|t| t.id == pair.task).expect("assigned task is available");
            let mut w = available_w.swap_remove(wi);
            let t = available_t.swap_remove(ti);
            let travel = euclidean_distance(w.loc, t.loc) / w.velocity;
            let rejoin = p + (travel.ceil() as usize).max(1);
            w.loc = t.loc;
            w.arrival = rejoin as f64;
            busy.push((rejoin, w));
            done_t += 1;
        }
        // Keep the order of available entities independent of removals.
        available_w.sort_by_key(|w| w.id);
        available_t.sort_by_key(|t| t.id);

        assert_eq!(arrived_w, available_w.len() + busy.len(), "worker bookkeeping out of balance");
        assert_eq!(arrived_t, available_t.len() + done_t + expired_t, "task bookkeeping out of balance");

        log::debug!(
            "instance {p}: {} pairs, {} assigned, quality {:.3}, cost {:.3}{}",
            inst.pairs.len(),
            assignment.len(),
            assignment.total_quality_mean(),
            assignment.total_cost_mean(),
            if go { "" } else { " (deferred)" }
        );
        run.metrics.push(InstanceMetrics {
            instance: p,
            quality: assignment.total_quality_mean(),
            cost: assignment.total_cost_mean(),
            wall_ms,
            rel_err_workers: err_w,
            rel_err_tasks: err_t,
            n_available_w: n_aw,
            n_available_t: n_at,
            n_assigned: assignment.len(),
            n_expired: expired,
        });
    }
    Ok(run)
}

/// Forecast error of the grid model at one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionError {
    pub window: usize,
    pub instance: usize,
    pub rel_err_workers: f64,
    pub rel_err_tasks: f64,
}

/// Replays the stream's arrivals through a grid model and scores each
/// forecast against the next instance's actual counts, from instance 2 on.
pub fn prediction_errors(stream: &ArrivalStream, gamma: usize, window: usize) -> Vec<PredictionError> {
    let mut grid = GridModel::new(gamma, window);
    let mut out = Vec::new();
    for p in 1..=stream.len() {
        let a = stream.at(p);
        if p > 1 {
            let f = grid.forecast_counts();
            let est_w: Vec<u32> = f.iter().map(|c| c.workers).collect();
            let est_t: Vec<u32> = f.iter().map(|c| c.tasks).collect();
            out.push(PredictionError {
                window,
                instance: p,
                rel_err_workers: cell_relative_error(&est_w, &grid.histogram(a.workers.iter().map(|w| w.loc))),
                rel_err_tasks: cell_relative_error(&est_t, &grid.histogram(a.tasks.iter().map(|t| t.loc))),
            });
        }
        grid.record_instance(&a.workers, &a.tasks);
    }
    out
}
