use std::collections::HashSet;

use mqa_core::instance::{exact_pair, Instance};
use mqa_core::solvers::{brute_force_oracle, solve_bb, solve_dnc, solve_greedy, solve_random, BbOptions, SolveParams, SolverOutcome};
use mqa_core::CandidatePair;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pairs_strategy() -> impl Strategy<Value = Vec<CandidatePair>> {
    (1u32..=5, 1u32..=5).prop_flat_map(|(n, m)| {
        proptest::collection::vec(proptest::option::weighted(0.7, (0u32..=12, 1u32..=5)), (n * m) as usize).prop_map(move |cells| {
            cells
                .into_iter()
                .enumerate()
                .filter_map(|(i, cell)| {
                    let (c, q) = cell?;
                    let (w, t) = (i as u32 / m + 1, i as u32 % m + 1);
                    Some(exact_pair(w, t, f64::from(c) / 2.0, f64::from(q)))
                })
                .collect()
        })
    })
}

/// Best total quality over all conflict-free subsets within budget.
fn exhaustive(pairs: &[CandidatePair], budget: f64) -> f64 {
    let k = pairs.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << k) {
        let chosen: Vec<&CandidatePair> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| &pairs[i]).collect();
        let workers: HashSet<_> = chosen.iter().map(|p| p.worker).collect();
        let tasks: HashSet<_> = chosen.iter().map(|p| p.task).collect();
        let cost: f64 = chosen.iter().map(|p| p.cost.mean()).sum();
        if workers.len() == chosen.len() && tasks.len() == chosen.len() && cost <= budget {
            best = best.max(chosen.iter().map(|p| p.quality.mean()).sum());
        }
    }
    best
}

fn assert_feasible(out: &SolverOutcome, pairs: &[CandidatePair], budget: f64) {
    let chosen = out.assignment.pair_ids();
    let workers: HashSet<_> = chosen.iter().map(|p| p.0).collect();
    let tasks: HashSet<_> = chosen.iter().map(|p| p.1).collect();
    assert_eq!(workers.len(), chosen.len());
    assert_eq!(tasks.len(), chosen.len());
    for (w, t) in &chosen {
        assert!(pairs.iter().any(|p| p.worker == *w && p.task == *t));
    }
    assert!(out.total_cost <= budget + 1e-9, "cost {} > {budget}", out.total_cost);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_solvers_agree_with_enumeration(pairs in pairs_strategy().prop_filter("small", |p| p.len() <= 14), budget in 0u32..=20) {
        let budget = f64::from(budget);
        let inst = Instance::from_pairs(0.0, vec![], vec![], pairs.clone());
        let want = exhaustive(&pairs, budget);
        let oracle = brute_force_oracle(&inst, budget).unwrap();
        let bb = solve_bb(&inst, budget, &BbOptions::default()).unwrap();
        prop_assert!((oracle.total_quality - want).abs() < 1e-9);
        prop_assert!((bb.total_quality - want).abs() < 1e-9);
        assert_feasible(&bb, &pairs, budget);
    }

    #[test]
    fn heuristics_stay_feasible(pairs in pairs_strategy(), budget in 0u32..=20, seed in any::<u64>(), pruning in any::<bool>()) {
        let budget = f64::from(budget);
        let inst = Instance::from_pairs(0.0, vec![], vec![], pairs.clone());
        let params = SolveParams::new(budget).with_pruning(pruning);
        let best = brute_force_oracle(&inst, budget).unwrap().total_quality;
        let outs = [
            solve_greedy(&inst, &params),
            solve_dnc(&inst, &params),
            solve_random(&inst, &params, &mut ChaCha8Rng::seed_from_u64(seed)),
        ];
        for out in &outs {
            assert_feasible(out, &pairs, budget);
            prop_assert!(out.total_quality <= best + 1e-9);
        }
    }
}

#[test]
fn empty_instance_yields_empty_assignments() {
    let inst = Instance::from_pairs(0.0, vec![], vec![], vec![]);
    let params = SolveParams::new(10.0);
    assert!(solve_greedy(&inst, &params).assignment.is_empty());
    assert!(solve_dnc(&inst, &params).assignment.is_empty());
    assert!(solve_bb(&inst, 10.0, &BbOptions::default()).unwrap().assignment.is_empty());
}
