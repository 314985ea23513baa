//! Exact best-first branch-and-bound over current pairs, bounded by a
//! fractional knapsack relaxation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{Assignment, CandidatePair, TaskId, WorkerId};

use super::{PruneCounters, SolverOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbOptions {
    /// Largest number of tasks the search accepts.
    pub max_tasks: usize,
}

impl Default for BbOptions {
    fn default() -> Self {
        Self { max_tasks: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    worker: usize,
    cost: f64,
    quality: f64,
    pair: usize,
}

/// Current pairs indexed by task (ascending id) and worker (ascending id).
#[derive(Debug, Clone)]
pub struct PairTable {
    pairs: Vec<CandidatePair>,
    tasks: Vec<TaskId>,
    workers: Vec<WorkerId>,
    per_task: Vec<Vec<Entry>>,
    /// `(task position, entry)` in descending quality-rate order.
    by_rate: Vec<(usize, Entry)>,
}

impl PairTable {
    /// Builds the table from the non-predicted pairs of `pairs`.
    pub fn new(pairs: &[CandidatePair]) -> Self {
        let pairs: Vec<CandidatePair> = pairs.iter().filter(|p| !p.predicted).cloned().collect();
        let mut tasks: Vec<TaskId> = pairs.iter().map(|p| p.task).collect();
        tasks.sort();
        tasks.dedup();
        let mut workers: Vec<WorkerId> = pairs.iter().map(|p| p.worker).collect();
        workers.sort();
        workers.dedup();
        let task_pos: HashMap<TaskId, usize> = tasks.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let worker_pos: HashMap<WorkerId, usize> = workers.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let mut per_task = vec![Vec::new(); tasks.len()];
        let mut by_rate = Vec::with_capacity(pairs.len());
        for (k, p) in pairs.iter().enumerate() {
            let e = Entry {
                worker: worker_pos[&p.worker],
                cost: p.cost.mean(),
                quality: p.quality.mean(),
                pair: k,
            };
            let t = task_pos[&p.task];
            per_task[t].push(e);
            by_rate.push((t, e));
        }
        for entries in &mut per_task {
            entries.sort_by_key(|e| e.worker);
        }
        // Zero-cost pairs rank first so they always enter the bound in full.
        let rate = |e: &Entry| if e.cost > 0.0 { e.quality / e.cost } else { f64::INFINITY };
        by_rate.sort_by(|a, b| rate(&b.1).total_cmp(&rate(&a.1)).then(a.0.cmp(&b.0)).then(a.1.worker.cmp(&b.1.worker)));
        Self {
            pairs,
            tasks,
            workers,
            per_task,
            by_rate,
        }
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }
    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }
    pub fn workers(&self) -> &[WorkerId] {
        &self.workers
    }
    pub fn pairs(&self) -> &[CandidatePair] {
        &self.pairs
    }

    /// Pairs of the task at `position`, by ascending worker id.
    pub fn task_pairs(&self, position: usize) -> impl Iterator<Item = &CandidatePair> {
        self.per_task[position].iter().map(|e| &self.pairs[e.pair])
    }

    /// The root node for a given budget.
    pub fn root(&self, budget: f64) -> BbNode {
        let mut root = BbNode {
            score: 0.0,
            chosen: Vec::new(),
            budget_left: budget,
            upper_bound: 0.0,
            task_index: 0,
            used: vec![false; self.workers.len()],
        };
        root.upper_bound = bb_compute_bound(&root, self);
        root
    }
}

/// A partial assignment that has decided the first `task_index` tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct BbNode {
    pub score: f64,
    pub chosen: Vec<(WorkerId, TaskId)>,
    pub budget_left: f64,
    pub upper_bound: f64,
    pub task_index: usize,
    used: Vec<bool>,
}

impl BbNode {
    pub fn uses_worker(&self, table: &PairTable, worker: WorkerId) -> bool {
        table.workers.binary_search(&worker).is_ok_and(|i| self.used[i])
    }
}

/// Node score plus the best fractional fill of the remaining budget with
/// pairs of undecided tasks and free workers, taken in quality-rate order.
pub fn bb_compute_bound(node: &BbNode, table: &PairTable) -> f64 {
    let mut bound = node.score;
    let mut remain = node.budget_left;
    for &(t, e) in &table.by_rate {
        if t < node.task_index || node.used[e.worker] {
            continue;
        }
        if e.cost <= remain {
            bound += e.quality;
            remain -= e.cost;
        } else {
            bound += e.quality * (remain / e.cost);
            break;
        }
    }
    bound
}

/// Children of `node`: one per free, affordable worker of the next task, then
/// the child that leaves the task unassigned.
pub fn bb_expand(node: &BbNode, table: &PairTable) -> Vec<BbNode> {
    let j = node.task_index;
    assert!(j < table.num_tasks(), "node has no undecided task");
    let mut out = Vec::new();
    for e in &table.per_task[j] {
        if node.used[e.worker] || e.cost > node.budget_left {
            continue;
        }
        let mut child = node.clone();
        child.score += e.quality;
        child.budget_left -= e.cost;
        child.task_index = j + 1;
        child.chosen.push((table.workers[e.worker], table.tasks[j]));
        child.used[e.worker] = true;
        child.upper_bound = bb_compute_bound(&child, table);
        out.push(child);
    }
    let mut skip = node.clone();
    skip.task_index = j + 1;
    skip.upper_bound = bb_compute_bound(&skip, table);
    out.push(skip);
    out
}

struct Queued {
    node: BbNode,
    seq: u64,
}

impl Queued {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.node
            .upper_bound
            .total_cmp(&other.node.upper_bound)
            .then(self.node.score.total_cmp(&other.node.score))
            .then(self.node.task_index.cmp(&other.node.task_index))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

fn best_child(children: &[BbNode]) -> usize {
    let mut best = 0;
    for (i, c) in children.iter().enumerate().skip(1) {
        let b = &children[best];
        let ord = c.upper_bound.total_cmp(&b.upper_bound).then(c.score.total_cmp(&b.score));
        if ord == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Exact optimum over the current pairs. `observe` sees every node the search
/// expands or finishes a dive on.
pub fn solve_bb_observed(instance: &Instance, budget: f64, opts: &BbOptions, observe: &mut dyn FnMut(&BbNode, &PairTable)) -> Result<SolverOutcome> {
    let start = Instant::now();
    let table = PairTable::new(&instance.pairs);
    if table.num_tasks() > opts.max_tasks {
        return Err(Error::InstanceTooLarge {
            solver: "bb",
            detail: format!("{} tasks exceed the limit of {}", table.num_tasks(), opts.max_tasks),
        });
    }
    let m = table.num_tasks();
    let mut best_score = -1.0;
    let mut best_chosen: Vec<(WorkerId, TaskId)> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Queued {
        node: table.root(budget),
        seq,
    });
    let mut pruned = PruneCounters::default();
    while let Some(Queued { node, .. }) = heap.pop() {
        if node.upper_bound <= best_score {
            pruned.dominance += 1;
            continue;
        }
        let mut o = node;
        loop {
            observe(&o, &table);
            if o.task_index >= m {
                break;
            }
            let mut children: Vec<BbNode> = bb_expand(&o, &table);
            let before = children.len();
            children.retain(|c| c.upper_bound > best_score);
            pruned.dominance += (before - children.len()) as u64;
            if children.is_empty() {
                break;
            }
            let next = children.remove(best_child(&children));
            for c in children {
                seq += 1;
                heap.push(Queued { node: c, seq });
            }
            o = next;
        }
        if o.score > best_score {
            best_score = o.score;
            best_chosen = o.chosen;
        }
    }
    let lookup: HashMap<(WorkerId, TaskId), &CandidatePair> = table.pairs.iter().map(|p| ((p.worker, p.task), p)).collect();
    let mut assignment = Assignment::new();
    for key in best_chosen {
        assignment.insert(lookup[&key].clone())?;
    }
    Ok(SolverOutcome::new(assignment, start.elapsed(), pruned))
}

pub fn solve_bb(instance: &Instance, budget: f64, opts: &BbOptions) -> Result<SolverOutcome> {
    solve_bb_observed(instance, budget, opts, &mut |_, _| {})
}
