//! Deciding whether to assign now or wait one instance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::model::{CandidatePair, TaskId, WorkerId};
use crate::solvers::{best_g, cost_dnc, SolverKind};

/// Existence probability and quality of an entity's best partner.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BestPartner {
    pub existence: f64,
    pub quality: f64,
}

impl BestPartner {
    pub fn new(existence: f64, quality: f64) -> Self {
        Self { existence, quality }
    }

    fn value(&self) -> f64 {
        self.existence * self.quality
    }
}

/// Population sizes and best-partner statistics for instances p and p+1.
/// Entities without any valid partner carry a zero statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingInputs {
    pub current_workers: Vec<BestPartner>,
    pub current_tasks: Vec<BestPartner>,
    pub predicted_workers: Vec<BestPartner>,
    pub predicted_tasks: Vec<BestPartner>,
    /// Size of the last assignment, an estimate of the optimum at p.
    pub last_assigned: usize,
    pub solver: SolverKind,
    pub deg: f64,
}

fn sum(xs: &[BestPartner]) -> f64 {
    xs.iter().map(BestPartner::value).sum()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        (num as f64 / den as f64).min(1.0)
    }
}

impl TimingInputs {
    /// Collects best-partner statistics from an instance's pairs. Current
    /// entities get existence 1 regardless of the stored probability.
    pub fn from_instance(instance: &Instance, last_assigned: Option<usize>, solver: SolverKind) -> Self {
        let mut by_worker: HashMap<WorkerId, &CandidatePair> = HashMap::new();
        let mut by_task: HashMap<TaskId, &CandidatePair> = HashMap::new();
        for p in &instance.pairs {
            let q = p.quality.mean();
            let w = by_worker.entry(p.worker).or_insert(p);
            if q > w.quality.mean() {
                *w = p;
            }
            let t = by_task.entry(p.task).or_insert(p);
            if q > t.quality.mean() {
                *t = p;
            }
        }
        let stat = |best: Option<&&CandidatePair>, current: bool| match best {
            Some(p) => BestPartner::new(if current { 1.0 } else { p.existence_prob }, p.quality.mean()),
            None => BestPartner::default(),
        };
        let mut inputs = Self {
            current_workers: Vec::new(),
            current_tasks: Vec::new(),
            predicted_workers: Vec::new(),
            predicted_tasks: Vec::new(),
            last_assigned: 0,
            solver,
            deg: 0.0,
        };
        for w in &instance.workers {
            let s = stat(by_worker.get(&w.id), !w.predicted);
            if w.predicted {
                inputs.predicted_workers.push(s);
            } else {
                inputs.current_workers.push(s);
            }
        }
        for t in &instance.tasks {
            let s = stat(by_task.get(&t.id), !t.predicted);
            if t.predicted {
                inputs.predicted_tasks.push(s);
            } else {
                inputs.current_tasks.push(s);
            }
        }
        let (n, m) = (inputs.current_workers.len(), inputs.current_tasks.len());
        inputs.last_assigned = last_assigned.unwrap_or(n.min(m)).min(n.min(m));
        let current_pairs = instance.pairs.iter().filter(|p| !p.predicted).count();
        inputs.deg = if m == 0 { 0.0 } else { current_pairs as f64 / m as f64 };
        inputs
    }

    /// Probability that a worker present at p is assigned at p.
    pub fn p_worker(&self) -> f64 {
        ratio(self.last_assigned, self.current_workers.len())
    }

    pub fn p_task(&self) -> f64 {
        ratio(self.last_assigned, self.current_tasks.len())
    }

    fn sizes_now(&self) -> (f64, f64) {
        (self.current_workers.len() as f64, self.current_tasks.len() as f64)
    }

    fn sizes_combined(&self) -> (f64, f64) {
        (
            (self.current_workers.len() + self.predicted_workers.len()) as f64,
            (self.current_tasks.len() + self.predicted_tasks.len()) as f64,
        )
    }

    /// Expected populations left at p+1 after assigning at p.
    pub fn sizes_next(&self) -> (f64, f64) {
        let (n, m) = self.sizes_now();
        (
            (1.0 - self.p_worker()) * n + self.predicted_workers.len() as f64,
            (1.0 - self.p_task()) * m + self.predicted_tasks.len() as f64,
        )
    }
}

/// Quality estimate for one assignment over both instances. Predicted
/// entities are discounted by the assignment probability.
pub fn estimate_q_combined(inputs: &TimingInputs) -> f64 {
    let (n, m) = inputs.sizes_combined();
    if n <= m {
        sum(&inputs.current_workers) + inputs.p_worker() * sum(&inputs.predicted_workers)
    } else {
        sum(&inputs.current_tasks) + inputs.p_task() * sum(&inputs.predicted_tasks)
    }
}

/// Quality estimate at p+1 over what remains after assigning at p: the
/// unassigned share of current entities plus all arrivals.
pub fn estimate_q_next(inputs: &TimingInputs) -> f64 {
    let (n, m) = inputs.sizes_next();
    if n <= m {
        (1.0 - inputs.p_worker()) * sum(&inputs.current_workers) + sum(&inputs.predicted_workers)
    } else {
        (1.0 - inputs.p_task()) * sum(&inputs.current_tasks) + sum(&inputs.predicted_tasks)
    }
}

/// Quality the solver would reach now, estimated without running it.
pub fn estimate_q_now(inputs: &TimingInputs) -> f64 {
    let (n, m) = inputs.sizes_now();
    if n <= m {
        sum(&inputs.current_workers)
    } else {
        sum(&inputs.current_tasks)
    }
}

pub fn quality_timing_condition(inputs: &TimingInputs, q_now: f64) -> bool {
    q_now + estimate_q_next(inputs) > estimate_q_combined(inputs)
}

/// Operation count of the greedy solver on `m` tasks and `n` workers.
pub fn cost_greedy_estimate(m: f64, n: f64) -> f64 {
    let h = m.min(n);
    let mn = m * n;
    mn + h * (3.0 * mn * mn + m + n) + h
}

fn solver_cost(kind: SolverKind, m: f64, n: f64, deg: f64) -> f64 {
    match kind {
        SolverKind::Dnc => {
            if m <= 0.0 {
                return 0.0;
            }
            let g = best_g(m.round() as usize, n.round() as usize, deg);
            cost_dnc(g as f64, m, n, deg)
        }
        _ => cost_greedy_estimate(m, n),
    }
}

/// Two separate runs are estimated to be cheaper than one combined run.
pub fn efficiency_timing_condition(inputs: &TimingInputs) -> bool {
    let (n, m) = inputs.sizes_now();
    let (n1, m1) = inputs.sizes_next();
    let (nc, mc) = inputs.sizes_combined();
    let e = |m, n| solver_cost(inputs.solver, m, n, inputs.deg);
    e(m, n) + e(m1, n1) < e(mc, nc)
}

pub fn should_run_now(inputs: &TimingInputs, q_now: f64) -> bool {
    quality_timing_condition(inputs, q_now) || efficiency_timing_condition(inputs)
}
