//! One assignment round: the available entities and every valid pair between
//! them, including pairs that involve predicted entities.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::ValueRange;
use crate::model::{is_valid_pair, reaches_in_time, CandidatePair, Task, TaskId, Timestamp, UncertainScalar, Worker, WorkerId};
use crate::prediction::{existence_probability, quality_distribution, PairCase};
use crate::uncertainty::pair_cost;

/// Quality evidence from a group of current pairs: the equal-weight score
/// distribution and how many pairs support it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSupport {
    pub quality: UncertainScalar,
    pub count: usize,
}

impl ScoreSupport {
    fn of(scores: &[f64]) -> Option<Self> {
        Some(Self {
            quality: quality_distribution(scores)?,
            count: scores.len(),
        })
    }
}

/// Quality evidence observed among the current valid pairs. Each group's
/// distribution is built once and shared by every predicted pair using it.
#[derive(Debug, Clone, Default)]
pub struct PairContext {
    /// Scores of current workers able to reach each current task.
    pub by_task: HashMap<TaskId, ScoreSupport>,
    /// Scores of current tasks reachable by each current worker.
    pub by_worker: HashMap<WorkerId, ScoreSupport>,
    pub all: Option<ScoreSupport>,
    pub n_workers: usize,
    pub n_tasks: usize,
}

impl PairContext {
    pub fn from_current(pairs: &[CandidatePair], n_workers: usize, n_tasks: usize) -> Self {
        let mut by_task: HashMap<TaskId, Vec<f64>> = HashMap::new();
        let mut by_worker: HashMap<WorkerId, Vec<f64>> = HashMap::new();
        let mut all = Vec::new();
        for p in pairs.iter().filter(|p| !p.predicted) {
            let q = p.quality.mean();
            by_task.entry(p.task).or_default().push(q);
            by_worker.entry(p.worker).or_default().push(q);
            all.push(q);
        }
        Self {
            by_task: supports(by_task),
            by_worker: supports(by_worker),
            all: ScoreSupport::of(&all),
            n_workers,
            n_tasks,
        }
    }
}

fn supports<K: std::hash::Hash + Eq>(groups: HashMap<K, Vec<f64>>) -> HashMap<K, ScoreSupport> {
    groups.into_iter().filter_map(|(k, v)| Some((k, ScoreSupport::of(&v)?))).collect()
}

/// Source of pair costs and qualities.
pub trait PairModel {
    /// The pair between two observed entities, or `None` when it is invalid.
    fn current_pair(&self, worker: &Worker, task: &Task, now: Timestamp) -> Option<CandidatePair>;

    /// A pair with at least one predicted side, or `None` when it is invalid
    /// or has no quality evidence.
    fn predicted_pair(&self, worker: &Worker, task: &Task, now: Timestamp, ctx: &PairContext) -> Option<CandidatePair>;
}

/// Pair construction for a predicted side: box-based cost, quality sampled
/// from comparable current pairs, and a support-based existence probability.
pub fn estimate_predicted_pair(
    worker: &Worker,
    task: &Task,
    now: Timestamp,
    ctx: &PairContext,
    unit_price: f64,
    budget: f64,
) -> Option<CandidatePair> {
    if !reaches_in_time(worker, task, now) {
        return None;
    }
    let cost = pair_cost(worker, task, unit_price);
    if cost.mean() > budget {
        return None;
    }
    let (case, support) = match (worker.predicted, task.predicted) {
        (true, false) => (PairCase::PredictedWorker, ctx.by_task.get(&task.id)),
        (false, true) => (PairCase::PredictedTask, ctx.by_worker.get(&worker.id)),
        (true, true) => (PairCase::BothPredicted, ctx.all.as_ref()),
        (false, false) => return None,
    };
    let support = support?;
    Some(CandidatePair {
        worker: worker.id,
        task: task.id,
        cost,
        quality: support.quality.clone(),
        existence_prob: existence_probability(case, support.count, ctx.n_workers, ctx.n_tasks),
        predicted: true,
    })
}

/// Euclidean costs and a seeded, per-pair truncated-Gaussian quality score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricModel {
    pub seed: u64,
    pub quality: ValueRange,
    pub unit_price: f64,
    pub budget: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl GeometricModel {
    /// Deterministic in `(seed, worker, task)`, independent of call order.
    pub fn quality_score(&self, worker: WorkerId, task: TaskId) -> f64 {
        let (lo, hi) = (self.quality.lo(), self.quality.hi());
        if hi <= lo {
            return lo;
        }
        let key = splitmix64(self.seed ^ splitmix64((u64::from(worker.0) << 32) | u64::from(task.0)));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let normal = Normal::new(self.quality.mid(), hi - lo).expect("finite parameters");
        loop {
            let q = normal.sample(&mut rng);
            if (lo..=hi).contains(&q) {
                return q;
            }
        }
    }
}

impl PairModel for GeometricModel {
    fn current_pair(&self, worker: &Worker, task: &Task, now: Timestamp) -> Option<CandidatePair> {
        if !is_valid_pair(worker, task, now, self.unit_price, self.budget) {
            return None;
        }
        let cost = crate::model::euclidean_distance(worker.loc, task.loc) * self.unit_price;
        Some(CandidatePair::exact(worker.id, task.id, cost, self.quality_score(worker.id, task.id)))
    }

    fn predicted_pair(&self, worker: &Worker, task: &Task, now: Timestamp, ctx: &PairContext) -> Option<CandidatePair> {
        estimate_predicted_pair(worker, task, now, ctx, self.unit_price, self.budget)
    }
}

/// Explicit `(cost, quality)` entries keyed by ids. Missing entries are
/// invalid pairs. Entities flagged as predicted are looked up by the same ids,
/// which models a perfectly informed predictor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableModel {
    entries: HashMap<(WorkerId, TaskId), (f64, f64)>,
    pub budget: f64,
}

impl TableModel {
    pub fn new(budget: f64) -> Self {
        Self {
            entries: HashMap::new(),
            budget,
        }
    }

    pub fn with_entry(mut self, worker: u32, task: u32, cost: f64, quality: f64) -> Self {
        self.insert(worker, task, cost, quality);
        self
    }

    pub fn insert(&mut self, worker: u32, task: u32, cost: f64, quality: f64) {
        self.entries.insert((WorkerId(worker), TaskId(task)), (cost, quality));
    }

    fn lookup(&self, worker: &Worker, task: &Task) -> Option<CandidatePair> {
        let &(c, q) = self.entries.get(&(worker.id, task.id))?;
        (c <= self.budget).then(|| CandidatePair::exact(worker.id, task.id, c, q))
    }
}

impl PairModel for TableModel {
    fn current_pair(&self, worker: &Worker, task: &Task, _now: Timestamp) -> Option<CandidatePair> {
        self.lookup(worker, task)
    }

    fn predicted_pair(&self, worker: &Worker, task: &Task, _now: Timestamp, _ctx: &PairContext) -> Option<CandidatePair> {
        self.lookup(worker, task).map(|mut p| {
            p.predicted = true;
            p
        })
    }
}

/// Entities and valid pairs for a single round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub now: Timestamp,
    pub workers: Vec<Worker>,
    pub tasks: Vec<Task>,
    pub pairs: Vec<CandidatePair>,
}

impl Instance {
    /// Enumerates all valid pairs. Current pairs come first, in worker-major
    /// order, followed by pairs that involve predicted entities.
    pub fn build(model: &dyn PairModel, now: Timestamp, workers: Vec<Worker>, tasks: Vec<Task>) -> Self {
        let mut pairs = Vec::new();
        let current_w: Vec<&Worker> = workers.iter().filter(|w| !w.predicted).collect();
        let current_t: Vec<&Task> = tasks.iter().filter(|t| !t.predicted).collect();
        for w in &current_w {
            for t in &current_t {
                if let Some(p) = model.current_pair(w, t, now) {
                    pairs.push(p);
                }
            }
        }
        let has_predicted = workers.iter().any(|w| w.predicted) || tasks.iter().any(|t| t.predicted);
        if has_predicted {
            let ctx = PairContext::from_current(&pairs, current_w.len(), current_t.len());
            for w in &workers {
                for t in &tasks {
                    if (w.predicted || t.predicted) && !(w.predicted && t.predicted && ctx.all.is_none()) {
                        if let Some(p) = model.predicted_pair(w, t, now, &ctx) {
                            pairs.push(p);
                        }
                    }
                }
            }
        }
        Self { now, workers, tasks, pairs }
    }

    /// An instance over explicit pairs; entities are taken as given.
    pub fn from_pairs(now: Timestamp, workers: Vec<Worker>, tasks: Vec<Task>, pairs: Vec<CandidatePair>) -> Self {
        Self { now, workers, tasks, pairs }
    }

    pub fn has_predicted(&self) -> bool {
        self.pairs.iter().any(|p| p.predicted)
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Current-only view: predicted entities and their pairs removed.
    pub fn current_only(&self) -> Self {
        Self {
            now: self.now,
            workers: self.workers.iter().filter(|w| !w.predicted).cloned().collect(),
            tasks: self.tasks.iter().filter(|t| !t.predicted).cloned().collect(),
            pairs: self.pairs.iter().filter(|p| !p.predicted).cloned().collect(),
        }
    }
}

/// Pair of scalars used by fixtures: exact cost and quality.
pub fn exact_pair(worker: u32, task: u32, cost: f64, quality: f64) -> CandidatePair {
    CandidatePair::exact(WorkerId(worker), TaskId(task), cost, quality)
}

/// Moments-backed pair, mostly for tests of the probabilistic rules.
pub fn uncertain_pair(worker: u32, task: u32, cost: UncertainScalar, quality: UncertainScalar) -> CandidatePair {
    CandidatePair {
        worker: WorkerId(worker),
        task: TaskId(task),
        cost,
        quality,
        existence_prob: 1.0,
        predicted: false,
    }
}
