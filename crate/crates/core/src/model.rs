//! Domain types shared by every other module: entities, uncertain scalars,
//! candidate pairs and assignments.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::pair_cost;

/// Timestamps are measured in instance units; instance `p` starts at time `p`.
pub type Timestamp = f64;

#[repr(transparent)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkerId(pub u32);

#[repr(transparent)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub u32);

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Identifiers at or above this value are reserved for predicted samples.
pub const PREDICTED_ID_BASE: u32 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

pub fn euclidean_distance(a: Location, b: Location) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    pub id: WorkerId,
    pub loc: Location,
    /// Space units per instance.
    pub velocity: f64,
    pub arrival: Timestamp,
    pub predicted: bool,
    /// Uniform-kernel half-width per dimension; zero for observed workers.
    pub half_width: [f64; 2],
}

impl Worker {
    pub fn new(id: u32, loc: Location, velocity: f64, arrival: Timestamp) -> Self {
        Self {
            id: WorkerId(id),
            loc,
            velocity,
            arrival,
            predicted: false,
            half_width: [0.0; 2],
        }
    }

    pub fn predicted(id: WorkerId, loc: Location, velocity: f64, arrival: Timestamp, half_width: [f64; 2]) -> Self {
        Self {
            id,
            loc,
            velocity,
            arrival,
            predicted: true,
            half_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub loc: Location,
    pub deadline: Timestamp,
    pub arrival: Timestamp,
    pub predicted: bool,
    pub half_width: [f64; 2],
}

impl Task {
    pub fn new(id: u32, loc: Location, deadline: Timestamp, arrival: Timestamp) -> Self {
        Self {
            id: TaskId(id),
            loc,
            deadline,
            arrival,
            predicted: false,
            half_width: [0.0; 2],
        }
    }

    pub fn predicted(id: TaskId, loc: Location, deadline: Timestamp, arrival: Timestamp, half_width: [f64; 2]) -> Self {
        Self {
            id,
            loc,
            deadline,
            arrival,
            predicted: true,
            half_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarKind {
    Exact,
    Sampled,
    Moments,
}

/// A bounded quantity that is either known exactly or summarized by its first
/// two moments (optionally backed by weighted samples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainScalar {
    kind: ScalarKind,
    mean: f64,
    variance: f64,
    lb: f64,
    ub: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Arc<[(f64, f64)]>>,
}

impl UncertainScalar {
    pub fn exact(value: f64) -> Self {
        Self {
            kind: ScalarKind::Exact,
            mean: value,
            variance: 0.0,
            lb: value,
            ub: value,
            samples: None,
        }
    }

    /// Moment summary; the mean is clamped into `[lb, ub]` to absorb rounding.
    pub fn moments(mean: f64, variance: f64, lb: f64, ub: f64) -> Self {
        debug_assert!(lb <= ub, "lb {lb} > ub {ub}");
        Self {
            kind: ScalarKind::Moments,
            mean: mean.clamp(lb, ub),
            variance: variance.max(0.0),
            lb,
            ub,
            samples: None,
        }
    }

    /// Weighted samples `(value, weight)`; weights must be positive and sum to 1.
    pub fn sampled(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let mut mean = 0.0;
        let mut lb = f64::INFINITY;
        let mut ub = f64::NEG_INFINITY;
        for &(v, w) in &samples {
            mean += v * w;
            lb = lb.min(v);
            ub = ub.max(v);
        }
        let variance = samples.iter().map(|&(v, w)| w * (v - mean).powi(2)).sum::<f64>();
        Ok(Self {
            kind: ScalarKind::Sampled,
            mean: mean.clamp(lb, ub),
            variance,
            lb,
            ub,
            samples: Some(samples.into()),
        })
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    pub fn variance(&self) -> f64 {
        self.variance
    }
    pub fn lb(&self) -> f64 {
        self.lb
    }
    pub fn ub(&self) -> f64 {
        self.ub
    }
    pub fn samples(&self) -> Option<&[(f64, f64)]> {
        self.samples.as_deref()
    }

    pub fn is_deterministic(&self) -> bool {
        self.variance == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub worker: WorkerId,
    pub task: TaskId,
    pub cost: UncertainScalar,
    pub quality: UncertainScalar,
    pub existence_prob: f64,
    /// True when either endpoint is a predicted entity.
    pub predicted: bool,
}

impl CandidatePair {
    /// A current-current pair with known cost and quality.
    pub fn exact(worker: WorkerId, task: TaskId, cost: f64, quality: f64) -> Self {
        Self {
            worker,
            task,
            cost: UncertainScalar::exact(cost),
            quality: UncertainScalar::exact(quality),
            existence_prob: 1.0,
            predicted: false,
        }
    }

    /// Quality per unit of cost; zero-cost pairs rank above every paid pair.
    pub fn quality_rate(&self) -> f64 {
        let c = self.cost.mean();
        if c > 0.0 {
            self.quality.mean() / c
        } else {
            f64::INFINITY
        }
    }
}

/// A conflict-free set of pairs with running totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pairs: Vec<CandidatePair>,
    #[serde(skip)]
    workers: HashSet<WorkerId>,
    #[serde(skip)]
    tasks: HashSet<TaskId>,
    total_quality_mean: f64,
    total_cost_lb: f64,
    total_cost_ub: f64,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pair: CandidatePair) -> Result<()> {
        if self.workers.contains(&pair.worker) {
            return Err(Error::WorkerTaken(pair.worker));
        }
        if self.tasks.contains(&pair.task) {
            return Err(Error::TaskTaken(pair.task));
        }
        self.workers.insert(pair.worker);
        self.tasks.insert(pair.task);
        self.total_quality_mean += pair.quality.mean();
        self.total_cost_lb += pair.cost.lb();
        self.total_cost_ub += pair.cost.ub();
        self.pairs.push(pair);
        Ok(())
    }

    pub fn remove_task(&mut self, task: TaskId) -> Option<CandidatePair> {
        let idx = self.pairs.iter().position(|p| p.task == task)?;
        let pair = self.pairs.remove(idx);
        self.workers.remove(&pair.worker);
        self.tasks.remove(&pair.task);
        self.recompute_totals();
        Some(pair)
    }

    /// Keeps only the pairs for which `keep` returns true.
    pub fn retain(&mut self, mut keep: impl FnMut(&CandidatePair) -> bool) {
        self.pairs.retain(|p| keep(p));
        self.workers = self.pairs.iter().map(|p| p.worker).collect();
        self.tasks = self.pairs.iter().map(|p| p.task).collect();
        self.recompute_totals();
    }

    fn recompute_totals(&mut self) {
        self.total_quality_mean = self.pairs.iter().map(|p| p.quality.mean()).sum();
        self.total_cost_lb = self.pairs.iter().map(|p| p.cost.lb()).sum();
        self.total_cost_ub = self.pairs.iter().map(|p| p.cost.ub()).sum();
    }

    pub fn contains_worker(&self, w: WorkerId) -> bool {
        self.workers.contains(&w)
    }
    pub fn contains_task(&self, t: TaskId) -> bool {
        self.tasks.contains(&t)
    }
    pub fn pair_for_worker(&self, w: WorkerId) -> Option<&CandidatePair> {
        self.pairs.iter().find(|p| p.worker == w)
    }
    pub fn pairs(&self) -> &[CandidatePair] {
        &self.pairs
    }
    pub fn into_pairs(self) -> Vec<CandidatePair> {
        self.pairs
    }
    pub fn len(&self) -> usize {
        self.pairs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
    pub fn total_quality_mean(&self) -> f64 {
        self.total_quality_mean
    }
    pub fn total_cost_lb(&self) -> f64 {
        self.total_cost_lb
    }
    pub fn total_cost_ub(&self) -> f64 {
        self.total_cost_ub
    }
    pub fn total_cost_mean(&self) -> f64 {
        self.pairs.iter().map(|p| p.cost.mean()).sum()
    }

    /// Sorted `(worker, task)` list, handy for comparisons in tests and reports.
    pub fn pair_ids(&self) -> Vec<(WorkerId, TaskId)> {
        let mut ids: Vec<_> = self.pairs.iter().map(|p| (p.worker, p.task)).collect();
        ids.sort();
        ids
    }
}

impl FromIterator<CandidatePair> for Result<Assignment> {
    fn from_iter<I: IntoIterator<Item = CandidatePair>>(iter: I) -> Self {
        let mut a = Assignment::new();
        for p in iter {
            a.insert(p)?;
        }
        Ok(a)
    }
}

/// Exact reward for travelling between two observed entities.
pub fn travel_cost_exact(worker: &Worker, task: &Task, unit_price: f64) -> Result<UncertainScalar> {
    if worker.predicted || task.predicted {
        return Err(Error::PredictedEntity);
    }
    Ok(UncertainScalar::exact(unit_price * euclidean_distance(worker.loc, task.loc)))
}

/// Deadline reachability from the worker's (mean) location. A worker that has
/// not arrived yet starts travelling at its arrival time.
pub fn reaches_in_time(worker: &Worker, task: &Task, now: Timestamp) -> bool {
    let start = now.max(worker.arrival);
    start + euclidean_distance(worker.loc, task.loc) / worker.velocity <= task.deadline
}

/// Deadline reachable and (mean) cost within the full per-instance budget.
pub fn is_valid_pair(worker: &Worker, task: &Task, now: Timestamp, unit_price: f64, budget: f64) -> bool {
    reaches_in_time(worker, task, now) && pair_cost(worker, task, unit_price).mean() <= budget
}
