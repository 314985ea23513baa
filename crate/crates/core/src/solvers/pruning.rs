//! Candidate-set pruning and best-pair selection shared by the heuristics.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::model::{CandidatePair, TaskId, UncertainScalar, WorkerId};
use crate::uncertainty::{prob_budget_feasible, prob_quality_greater};

use super::PruneCounters;

/// `a` is certainly cheaper and certainly better than `b`.
pub fn dominates(a: &CandidatePair, b: &CandidatePair) -> bool {
    a.cost.ub() < b.cost.lb() && a.quality.lb() > b.quality.ub()
}

/// `a` is more likely than not both cheaper and better than `b`.
///
/// Under the normal approximation each probability exceeds one half exactly
/// when the mean difference has the right sign, so the test is made on the
/// means directly; this avoids rounding to 0.5 when the difference is tiny
/// relative to the spread. Equal mean costs only count when both are certain.
pub fn prob_dominates(a: &CandidatePair, b: &CandidatePair) -> bool {
    let (ca, cb) = (a.cost.mean(), b.cost.mean());
    a.quality.mean() > b.quality.mean() && (ca < cb || (ca == cb && a.cost.variance() == 0.0 && b.cost.variance() == 0.0))
}

/// Sweep key of one pair, stored in sweep order so rounds read memory
/// sequentially.
#[derive(Debug, Clone, Copy)]
struct QKey {
    q_mean: f64,
    c_mean: f64,
    certain: bool,
    pos: usize,
}

/// `(quality bound, cost bound)`: the lower quality and upper cost bound in
/// the dominator order, the upper quality and lower cost bound in the
/// dominated order.
#[derive(Debug, Clone, Copy)]
struct BoundKey {
    q: f64,
    c: f64,
    pos: usize,
}

#[derive(Debug, Clone, Default)]
struct SweepKeys {
    by_q: Vec<QKey>,
    /// Descending quality lower bound.
    by_lb: Vec<BoundKey>,
    /// Descending quality upper bound.
    by_ub: Vec<BoundKey>,
}

impl SweepKeys {
    fn filtered(&self, keep: &[bool], out: &mut SweepKeys) {
        out.by_q.clear();
        out.by_q.extend(self.by_q.iter().filter(|x| keep[x.pos]));
        out.by_lb.clear();
        out.by_lb.extend(self.by_lb.iter().filter(|x| keep[x.pos]));
        out.by_ub.clear();
        out.by_ub.extend(self.by_ub.iter().filter(|x| keep[x.pos]));
    }
}

fn sweep_keys(pairs: &[CandidatePair], items: &[usize]) -> SweepKeys {
    let mut by_q: Vec<QKey> = items
        .iter()
        .enumerate()
        .map(|(pos, &i)| QKey {
            q_mean: pairs[i].quality.mean(),
            c_mean: pairs[i].cost.mean(),
            certain: pairs[i].cost.variance() == 0.0,
            pos,
        })
        .collect();
    by_q.sort_by(|a, b| b.q_mean.total_cmp(&a.q_mean).then(a.pos.cmp(&b.pos)));
    let bounds = |f: &dyn Fn(&CandidatePair) -> (f64, f64)| -> Vec<BoundKey> {
        let mut v: Vec<BoundKey> = items
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                let (q, c) = f(&pairs[i]);
                BoundKey { q, c, pos }
            })
            .collect();
        v.sort_by(|a, b| b.q.total_cmp(&a.q).then(a.pos.cmp(&b.pos)));
        v
    };
    SweepKeys {
        by_q,
        by_lb: bounds(&|p| (p.quality.lb(), p.cost.ub())),
        by_ub: bounds(&|p| (p.quality.ub(), p.cost.lb())),
    }
}

/// Sets `dominated[pos]` for every pair in `keys`.
fn mark_dominated(keys: &SweepKeys, dominated: &mut [bool], counters: &mut PruneCounters) {
    // A pair is dominated when some pair of strictly higher mean quality
    // costs less.
    let (mut min_cost, mut min_certain) = (f64::INFINITY, f64::INFINITY);
    let mut any = false;
    for group in keys.by_q.chunk_by(|a, b| a.q_mean == b.q_mean) {
        for x in group {
            let d = min_cost < x.c_mean || (x.certain && min_certain <= x.c_mean);
            dominated[x.pos] = d;
            any |= d;
        }
        for x in group {
            min_cost = min_cost.min(x.c_mean);
            if x.certain {
                min_certain = min_certain.min(x.c_mean);
            }
        }
    }
    if !any {
        return;
    }
    // Attribute each removal: interval dominance when some pair's quality
    // lower bound clears this pair's upper bound at a certainly lower cost.
    // Visiting pairs by descending upper bound only ever widens the set of
    // candidate dominators.
    let mut next = 0;
    let mut min_ub = f64::INFINITY;
    for x in keys.by_ub.iter().filter(|x| dominated[x.pos]) {
        while next < keys.by_lb.len() && keys.by_lb[next].q > x.q {
            min_ub = min_ub.min(keys.by_lb[next].c);
            next += 1;
        }
        if min_ub < x.c {
            counters.dominance += 1;
        } else {
            counters.probabilistic += 1;
        }
    }
}

/// Pairs of `order` that no other pair of `order` dominates, in input order.
/// Dominance in either sense is a strict partial order on the means, so the
/// result does not depend on the order. With pruning disabled every pair is
/// a candidate.
pub fn skyline(pairs: &[CandidatePair], order: impl IntoIterator<Item = usize>, pruning: bool, counters: &mut PruneCounters) -> Vec<usize> {
    let items: Vec<usize> = order.into_iter().collect();
    if !pruning || items.len() < 2 {
        return items;
    }
    let keys = sweep_keys(pairs, &items);
    let mut dominated = vec![false; items.len()];
    mark_dominated(&keys, &mut dominated, counters);
    items.into_iter().zip(dominated).filter(|&(_, d)| !d).map(|(i, _)| i).collect()
}

/// Deterministic ordering among equally likely winners.
fn tie_break(a: &CandidatePair, b: &CandidatePair) -> Ordering {
    a.cost
        .mean()
        .total_cmp(&b.cost.mean())
        .then(a.worker.cmp(&b.worker))
        .then(a.task.cmp(&b.task))
}

/// Position in `candidates` of the pair most likely to have the highest
/// quality among the budget-feasible ones.
pub fn select_best_index(candidates: &[&CandidatePair], committed_lb: f64, budget_max: f64, delta: f64) -> Option<usize> {
    let feasible: Vec<usize> = (0..candidates.len())
        .filter(|&i| prob_budget_feasible(committed_lb, &candidates[i].cost, budget_max) > delta)
        .collect();
    // The pairwise probabilities depend only on quality mean and variance, so
    // candidates sharing both are scored once.
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    let mut group_of: HashMap<(u64, u64), usize> = HashMap::new();
    let mut member_group = Vec::with_capacity(feasible.len());
    for &i in &feasible {
        let q = &candidates[i].quality;
        let g = *group_of.entry((q.mean().to_bits(), q.variance().to_bits())).or_insert_with(|| {
            groups.push((q.mean(), q.variance(), 0));
            groups.len() - 1
        });
        groups[g].2 += 1;
        member_group.push(g);
    }
    // Score groups in descending mean order, summing terms against the
    // highest-mean groups first. Every term is at most zero, so a partial sum
    // below the best complete score rules the group out.
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| groups[b].0.total_cmp(&groups[a].0).then(a.cmp(&b)));
    let mut group_log_p: Vec<Option<f64>> = vec![None; groups.len()];
    let mut best_group = f64::NEG_INFINITY;
    for &g in &order {
        let (mean, var, _) = groups[g];
        let x = UncertainScalar::moments(mean, var, mean, mean);
        let mut sum = 0.0;
        let mut pruned = false;
        for &h in &order {
            let (mh, vh, count) = groups[h];
            let others = if g == h { count - 1 } else { count };
            if others == 0 {
                continue;
            }
            let y = UncertainScalar::moments(mh, vh, mh, mh);
            sum += others as f64 * prob_quality_greater(&x, &y).ln();
            if sum < best_group {
                pruned = true;
                break;
            }
        }
        if !pruned {
            best_group = best_group.max(sum);
            group_log_p[g] = Some(sum);
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for (k, &i) in feasible.iter().enumerate() {
        let ci = candidates[i];
        let Some(log_p) = group_log_p[member_group[k]] else {
            continue;
        };
        let better = match best {
            None => true,
            Some((b, lp)) => match log_p.total_cmp(&lp) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => tie_break(ci, candidates[b]) == Ordering::Less,
            },
        };
        if better {
            best = Some((i, log_p));
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_best_pair<'a>(candidates: &[&'a CandidatePair], committed_lb: f64, budget_max: f64, delta: f64) -> Option<&'a CandidatePair> {
    select_best_index(candidates, committed_lb, budget_max, delta).map(|i| candidates[i])
}

/// Repeated skyline selection over `pairs[subset]` until nothing fits.
/// Picking a pair removes every other pair that shares its worker or task.
/// Returns the chosen indices in selection order.
pub(crate) fn iterative_selection(
    pairs: &[CandidatePair],
    subset: &[usize],
    budget_max: f64,
    delta: f64,
    pruning: bool,
    max_rounds: usize,
    counters: &mut PruneCounters,
) -> Vec<usize> {
    let mut alive = vec![true; subset.len()];
    let mut eligible = vec![false; subset.len()];
    let mut dominated = vec![false; subset.len()];
    let ids: Vec<(WorkerId, TaskId, f64)> = subset.iter().map(|&i| (pairs[i].worker, pairs[i].task, pairs[i].cost.lb())).collect();
    // The sweep orders are fixed; each round filters them.
    let keys = if pruning { sweep_keys(pairs, subset) } else { SweepKeys::default() };
    let mut round = SweepKeys::default();
    let mut chosen = Vec::new();
    let mut committed_lb = 0.0;
    for _ in 0..max_rounds {
        let remaining = budget_max - committed_lb;
        for (k, &(_, _, c_lb)) in ids.iter().enumerate() {
            eligible[k] = alive[k] && c_lb <= remaining;
            if alive[k] && !eligible[k] {
                counters.budget += 1;
            }
            dominated[k] = false;
        }
        if pruning {
            keys.filtered(&eligible, &mut round);
            if round.by_q.len() > 1 {
                mark_dominated(&round, &mut dominated, counters);
            }
        }
        let sky: Vec<usize> = (0..subset.len()).filter(|&k| eligible[k] && !dominated[k]).map(|k| subset[k]).collect();
        let refs: Vec<&CandidatePair> = sky.iter().map(|&i| &pairs[i]).collect();
        let Some(k) = select_best_index(&refs, committed_lb, budget_max, delta) else {
            break;
        };
        let pick = sky[k];
        let (w, t) = (pairs[pick].worker, pairs[pick].task);
        for (k, &(wk, tk, _)) in ids.iter().enumerate() {
            if wk == w || tk == t {
                alive[k] = false;
            }
        }
        committed_lb += pairs[pick].cost.lb();
        chosen.push(pick);
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{exact_pair, uncertain_pair};
    use crate::uncertainty::prob_cost_less_equal;
    use proptest::prelude::*;

    #[test]
    fn dominance_examples() {
        let a = exact_pair(1, 1, 1.0, 3.0);
        let b = exact_pair(2, 2, 3.0, 2.0);
        assert!(dominates(&a, &b));
        assert!(!dominates(&a, &a));
        let cheap_low = exact_pair(3, 3, 0.5, 1.0);
        assert!(!dominates(&cheap_low, &a));
    }

    #[test]
    fn prob_dominance_examples() {
        let a = exact_pair(1, 1, 1.0, 3.0);
        let b = exact_pair(2, 2, 3.0, 2.0);
        assert!(prob_dominates(&a, &b));
        let m = UncertainScalar::moments(2.0, 1.0, 0.0, 4.0);
        let x = uncertain_pair(1, 1, m.clone(), m.clone());
        assert!(!prob_dominates(&x, &x.clone()));
        let worse_cost = exact_pair(4, 4, 5.0, 4.0);
        assert!(!prob_dominates(&worse_cost, &a));
    }

    #[test]
    fn selection_examples() {
        let one = exact_pair(1, 1, 2.0, 1.0);
        assert_eq!(select_best_pair(&[&one], 0.0, 10.0, 0.5), Some(&one));
        assert_eq!(select_best_pair(&[&one], 10.0, 10.0, 0.5), None);
        let ps = [exact_pair(1, 1, 1.0, 3.0), exact_pair(2, 2, 1.0, 4.0), exact_pair(3, 3, 1.0, 2.0)];
        let refs: Vec<_> = ps.iter().collect();
        assert_eq!(select_best_pair(&refs, 0.0, 10.0, 0.5).unwrap().worker.0, 2);
        // ties go to the cheaper pair, then to the lower worker id
        let ps = [exact_pair(5, 1, 2.0, 4.0), exact_pair(4, 2, 1.0, 4.0), exact_pair(3, 3, 1.0, 4.0)];
        let refs: Vec<_> = ps.iter().collect();
        assert_eq!(select_best_pair(&refs, 0.0, 10.0, 0.5).unwrap().worker.0, 3);
        // infeasible high scorer is filtered before comparison
        let ps = [exact_pair(1, 1, 9.0, 9.0), exact_pair(2, 2, 1.0, 1.0)];
        let refs: Vec<_> = ps.iter().collect();
        assert_eq!(select_best_pair(&refs, 0.0, 5.0, 0.5).unwrap().worker.0, 2);
    }

    #[test]
    fn skyline_prunes_both_directions() {
        let ps = vec![exact_pair(2, 2, 3.0, 2.0), exact_pair(1, 1, 1.0, 3.0), exact_pair(3, 3, 0.5, 1.0)];
        let mut c = PruneCounters::default();
        let sky = skyline(&ps, 0..3, true, &mut c);
        assert_eq!(sky, vec![1, 2]);
        assert_eq!(c.dominance, 1);
        let mut c = PruneCounters::default();
        assert_eq!(skyline(&ps, 0..3, false, &mut c), vec![0, 1, 2]);
    }

    fn arb_pair() -> impl Strategy<Value = (u32, u32, f64, f64, f64, f64)> {
        (1u32..6, 1u32..6, 0u32..6, 0u32..3, 0u32..6, 0u32..3)
            .prop_map(|(w, t, c, cv, q, qv)| (w, t, f64::from(c), f64::from(cv), f64::from(q), f64::from(qv)))
    }

    fn build(raw: &[(u32, u32, f64, f64, f64, f64)]) -> Vec<CandidatePair> {
        raw.iter()
            .map(|&(w, t, c, cv, q, qv)| {
                let cost = UncertainScalar::moments(c, cv, c - 2.0 * cv, c + 2.0 * cv);
                let quality = UncertainScalar::moments(q, qv, q - 2.0 * qv, q + 2.0 * qv);
                uncertain_pair(w, t, cost, quality)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn skyline_matches_pairwise_definition(raw in prop::collection::vec(arb_pair(), 0..25)) {
            let ps = build(&raw);
            let mut c = PruneCounters::default();
            let sky = skyline(&ps, 0..ps.len(), true, &mut c);
            let expect: Vec<usize> = (0..ps.len())
                .filter(|&i| !(0..ps.len()).any(|j| dominates(&ps[j], &ps[i]) || prob_dominates(&ps[j], &ps[i])))
                .collect();
            prop_assert_eq!(&sky, &expect);
            prop_assert_eq!(c.dominance + c.probabilistic, (ps.len() - sky.len()) as u64);
            let mut rev = PruneCounters::default();
            let mut back = skyline(&ps, (0..ps.len()).rev(), true, &mut rev);
            back.reverse();
            prop_assert_eq!(back, sky);
            prop_assert_eq!(rev, c);
        }

        #[test]
        fn mean_rule_agrees_with_probabilities(raw in prop::collection::vec(arb_pair(), 2..3)) {
            let ps = build(&raw);
            let by_prob = prob_quality_greater(&ps[0].quality, &ps[1].quality) > 0.5
                && prob_cost_less_equal(&ps[0].cost, &ps[1].cost) > 0.5;
            prop_assert_eq!(prob_dominates(&ps[0], &ps[1]), by_prob);
        }

        #[test]
        fn grouped_selection_matches_pairwise(raw in prop::collection::vec(arb_pair(), 1..20), committed in 0.0f64..6.0) {
            let ps = build(&raw);
            let refs: Vec<&CandidatePair> = ps.iter().collect();
            let feasible: Vec<usize> = (0..ps.len())
                .filter(|&i| prob_budget_feasible(committed, &ps[i].cost, 8.0) > 0.3)
                .collect();
            let log_p = |i: usize| -> f64 {
                feasible.iter().filter(|&&j| j != i)
                    .map(|&j| prob_quality_greater(&ps[i].quality, &ps[j].quality).ln()).sum()
            };
            let got = select_best_index(&refs, committed, 8.0, 0.3);
            prop_assert_eq!(got.is_some(), !feasible.is_empty());
            if let Some(g) = got {
                prop_assert!(feasible.contains(&g));
                let top = feasible.iter().map(|&i| log_p(i)).fold(f64::NEG_INFINITY, f64::max);
                let lg = log_p(g);
                prop_assert!(lg == top || (lg - top).abs() <= 1e-9 * top.abs().max(1.0), "{} vs {}", lg, top);
            }
        }
    }
}
