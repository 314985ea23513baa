use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::Instance;

use super::{finalize, PruneCounters, SolveParams, SolverOutcome};

/// Visits the valid pairs in random order and keeps each one whose worker and
/// task are still free and whose cost fits the remaining pooled budget.
pub fn solve_random<R: Rng + ?Sized>(instance: &Instance, params: &SolveParams, rng: &mut R) -> SolverOutcome {
    let start = Instant::now();
    let mut order: Vec<usize> = (0..instance.pairs.len()).collect();
    order.shuffle(rng);
    let mut workers = HashSet::new();
    let mut tasks = HashSet::new();
    let mut remaining = params.budget_max;
    let mut selected = Vec::new();
    for i in order {
        let p = &instance.pairs[i];
        if workers.contains(&p.worker) || tasks.contains(&p.task) || p.cost.mean() > remaining {
            continue;
        }
        workers.insert(p.worker);
        tasks.insert(p.task);
        remaining -= p.cost.mean();
        selected.push(p.clone());
    }
    SolverOutcome::new(finalize(selected, params.budget), start.elapsed(), PruneCounters::default())
}
