use std::time::Instant;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::Assignment;

use super::bb::PairTable;
use super::{PruneCounters, SolverOutcome};

/// Largest search space the exhaustive oracle accepts.
pub const ORACLE_STATE_LIMIT: f64 = 1e7;

struct Search<'a> {
    table: &'a PairTable,
    options: Vec<Vec<usize>>,
    used: Vec<bool>,
    stack: Vec<usize>,
    best: f64,
    best_set: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, j: usize, left: f64, score: f64) {
        if j == self.options.len() {
            if score > self.best {
                self.best = score;
                self.best_set = self.stack.clone();
            }
            return;
        }
        self.run(j + 1, left, score);
        for k in 0..self.options[j].len() {
            let i = self.options[j][k];
            let p = &self.table.pairs()[i];
            let w = self.table.workers().binary_search(&p.worker).expect("worker is indexed");
            let cost = p.cost.mean();
            if self.used[w] || cost > left {
                continue;
            }
            self.used[w] = true;
            self.stack.push(i);
            self.run(j + 1, left - cost, score + p.quality.mean());
            self.stack.pop();
            self.used[w] = false;
        }
    }
}

/// Exhaustive search over every conflict-free subset of current pairs within
/// `budget`. Intended as a test oracle for small instances.
pub fn brute_force_oracle(instance: &Instance, budget: f64) -> Result<SolverOutcome> {
    let start = Instant::now();
    let table = PairTable::new(&instance.pairs);
    let mut options: Vec<Vec<usize>> = vec![Vec::new(); table.num_tasks()];
    for (i, p) in table.pairs().iter().enumerate() {
        let j = table.tasks().binary_search(&p.task).expect("task is indexed");
        options[j].push(i);
    }
    let states: f64 = options.iter().map(|o| (o.len() + 1) as f64).product();
    if states > ORACLE_STATE_LIMIT {
        return Err(Error::InstanceTooLarge {
            solver: "oracle",
            detail: format!("{states:.3e} states exceed {ORACLE_STATE_LIMIT:e}"),
        });
    }
    let mut search = Search {
        table: &table,
        options,
        used: vec![false; table.workers().len()],
        stack: Vec::new(),
        best: -1.0,
        best_set: Vec::new(),
    };
    search.run(0, budget, 0.0);
    let mut assignment = Assignment::new();
    for i in search.best_set {
        assignment.insert(table.pairs()[i].clone())?;
    }
    Ok(SolverOutcome::new(assignment, start.elapsed(), PruneCounters::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::exact_pair;

    #[test]
    fn single_pair() {
        let inst = Instance::from_pairs(0.0, vec![], vec![], vec![exact_pair(1, 1, 1.0, 2.0)]);
        assert_eq!(brute_force_oracle(&inst, 1.0).unwrap().assignment.len(), 1);
        assert!(brute_force_oracle(&inst, 0.5).unwrap().assignment.is_empty());
    }

    #[test]
    fn guard() {
        let pairs = (0..10).flat_map(|w| (0..10).map(move |t| exact_pair(w, t, 1.0, 1.0))).collect();
        let inst = Instance::from_pairs(0.0, vec![], vec![], pairs);
        assert!(brute_force_oracle(&inst, 3.0).is_err());
    }
}
