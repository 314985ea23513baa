//! Assignment algorithms for a single round.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, CandidatePair};

pub mod bb;
pub mod cost_model;
pub mod dnc;
pub mod greedy;
pub mod oracle;
pub mod pruning;
pub mod random;

pub use bb::{bb_compute_bound, bb_expand, solve_bb, BbNode, BbOptions, PairTable};
pub use cost_model::{best_g, cost_dnc, cost_dnc_derivative};
pub use dnc::{budget_constrained_selection, decompose, merge, solve_dnc, Subproblem};
pub use greedy::solve_greedy;
pub use oracle::brute_force_oracle;
pub use pruning::{dominates, prob_dominates, select_best_pair};
pub use random::solve_random;

/// Budgets and thresholds for one solver call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Budget for the pairs that are actually assigned now.
    pub budget: f64,
    /// Pooled budget used while predicted pairs compete for workers.
    pub budget_max: f64,
    pub delta: f64,
    /// Dominance and probabilistic pruning of the candidate set.
    pub pruning: bool,
}

impl SolveParams {
    pub fn new(budget: f64) -> Self {
        Self {
            budget,
            budget_max: budget,
            delta: 0.5,
            pruning: true,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_pruning(mut self, pruning: bool) -> Self {
        self.pruning = pruning;
        self
    }

    /// Pools the next instance's budget when predicted pairs take part.
    pub fn pooled(mut self, pool: bool) -> Self {
        self.budget_max = if pool { 2.0 * self.budget } else { self.budget };
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneCounters {
    pub dominance: u64,
    pub probabilistic: u64,
    pub budget: u64,
}

impl PruneCounters {
    pub fn add(&mut self, other: &PruneCounters) {
        self.dominance += other.dominance;
        self.probabilistic += other.probabilistic;
        self.budget += other.budget;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub assignment: Assignment,
    pub total_quality: f64,
    pub total_cost: f64,
    pub elapsed: Duration,
    pub pruned: PruneCounters,
}

impl SolverOutcome {
    pub fn new(assignment: Assignment, elapsed: Duration, pruned: PruneCounters) -> Self {
        Self {
            total_quality: assignment.total_quality_mean(),
            total_cost: assignment.total_cost_mean(),
            assignment,
            elapsed,
            pruned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Greedy,
    Dnc,
    Bb,
    Random,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Greedy, SolverKind::Dnc, SolverKind::Bb, SolverKind::Random];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Greedy => "greedy",
            SolverKind::Dnc => "dnc",
            SolverKind::Bb => "bb",
            SolverKind::Random => "random",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" => Ok(Self::Greedy),
            "dnc" | "d&c" => Ok(Self::Dnc),
            "bb" => Ok(Self::Bb),
            "random" => Ok(Self::Random),
            other => Err(Error::Config(format!("unknown solver {other:?}"))),
        }
    }
}

/// Drops pairs with a predicted side, then enforces the current budget by
/// dropping the lowest quality-rate pairs first.
pub fn finalize(selected: Vec<CandidatePair>, budget: f64) -> Assignment {
    let mut kept: Vec<CandidatePair> = selected.into_iter().filter(|p| !p.predicted).collect();
    let mut total: f64 = kept.iter().map(|p| p.cost.mean()).sum();
    if total > budget {
        let mut order: Vec<usize> = (0..kept.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&kept[a], &kept[b]);
            pa.quality_rate()
                .total_cmp(&pb.quality_rate())
                .then(pa.quality.mean().total_cmp(&pb.quality.mean()))
                .then(pb.worker.cmp(&pa.worker))
        });
        let mut drop = vec![false; kept.len()];
        for i in order {
            if total <= budget {
                break;
            }
            drop[i] = true;
            total -= kept[i].cost.mean();
        }
        let mut i = 0;
        kept.retain(|_| {
            i += 1;
            !drop[i - 1]
        });
    }
    let mut out = Assignment::new();
    for p in kept {
        out.insert(p).expect("solver output is conflict-free");
    }
    out
}
