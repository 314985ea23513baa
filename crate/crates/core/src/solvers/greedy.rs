use std::collections::HashSet;
use std::time::Instant;

use crate::instance::Instance;
use crate::model::CandidatePair;

use super::pruning::iterative_selection;
use super::{finalize, PruneCounters, SolveParams, SolverOutcome};

/// Number of selection rounds: one per entity on the smaller side.
pub(crate) fn round_limit(pairs: &[CandidatePair]) -> usize {
    let workers: HashSet<_> = pairs.iter().map(|p| p.worker).collect();
    let tasks: HashSet<_> = pairs.iter().map(|p| p.task).collect();
    workers.len().min(tasks.len())
}

/// Skyline greedy over all valid pairs under the pooled budget, followed by
/// removal of predicted pairs and repair to the current budget.
pub fn solve_greedy(instance: &Instance, params: &SolveParams) -> SolverOutcome {
    let start = Instant::now();
    let mut counters = PruneCounters::default();
    let pairs = &instance.pairs;
    let all: Vec<usize> = (0..pairs.len()).collect();
    let chosen = iterative_selection(
        pairs,
        &all,
        params.budget_max,
        params.delta,
        params.pruning,
        round_limit(pairs),
        &mut counters,
    );
    let selected = chosen.into_iter().map(|i| pairs[i].clone()).collect();
    let assignment = finalize(selected, params.budget);
    SolverOutcome::new(assignment, start.elapsed(), counters)
}
