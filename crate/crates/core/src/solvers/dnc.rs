//! Divide-and-conquer: sweep-based decomposition by task, recursive solving,
//! conflict-resolving merge and a final budget-constrained reselection.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{euclidean_distance, Assignment, CandidatePair, Location, TaskId, WorkerId};

use super::cost_model::best_g;
use super::pruning::{dominates, iterative_selection, prob_dominates, select_best_index};
use super::{finalize, PruneCounters, SolveParams, SolverOutcome};

/// A group of tasks and every pair that touches them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subproblem {
    pub tasks: Vec<TaskId>,
    /// Indices into the instance's pair list.
    pub pairs: Vec<usize>,
}

struct Ctx<'a> {
    pairs: &'a [CandidatePair],
    locs: HashMap<TaskId, Location>,
    budget_max: f64,
    delta: f64,
    pruning: bool,
    counters: PruneCounters,
}

impl Ctx<'_> {
    fn loc(&self, t: TaskId) -> Location {
        self.locs.get(&t).copied().unwrap_or_default()
    }

    fn sweep_cmp(&self, a: TaskId, b: TaskId) -> Ordering {
        let (la, lb) = (self.loc(a), self.loc(b));
        la.x.total_cmp(&lb.x).then(la.y.total_cmp(&lb.y)).then(a.cmp(&b))
    }
}

fn task_locations(instance: &Instance) -> HashMap<TaskId, Location> {
    instance.tasks.iter().map(|t| (t.id, t.loc)).collect()
}

/// Tasks with at least one pair, in first-seen order.
fn tasks_of(pairs: &[CandidatePair], subset: &[usize]) -> Vec<TaskId> {
    let mut seen = HashSet::new();
    subset.iter().map(|&i| pairs[i].task).filter(|t| seen.insert(*t)).collect()
}

fn split(ctx: &Ctx<'_>, tasks: &[TaskId], subset: &[usize], g: usize) -> Result<Vec<Subproblem>> {
    if g < 2 {
        return Err(Error::InvalidSubproblemCount(g));
    }
    let mut order = tasks.to_vec();
    order.sort_by(|&a, &b| ctx.sweep_cmp(a, b));
    let group = order.len().div_ceil(g).max(1);
    let mut assigned = vec![false; order.len()];
    let mut groups: Vec<Vec<TaskId>> = Vec::new();
    for anchor in 0..order.len() {
        if assigned[anchor] {
            continue;
        }
        assigned[anchor] = true;
        let origin = ctx.loc(order[anchor]);
        let mut rest: Vec<(f64, usize)> = (anchor + 1..order.len())
            .filter(|&k| !assigned[k])
            .map(|k| (euclidean_distance(origin, ctx.loc(order[k])), k))
            .collect();
        rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut members = vec![order[anchor]];
        for &(_, k) in rest.iter().take(group - 1) {
            assigned[k] = true;
            members.push(order[k]);
        }
        groups.push(members);
    }
    let slot: HashMap<TaskId, usize> = groups.iter().enumerate().flat_map(|(s, ts)| ts.iter().map(move |&t| (t, s))).collect();
    let mut subs: Vec<Subproblem> = groups.into_iter().map(|tasks| Subproblem { tasks, pairs: Vec::new() }).collect();
    for &i in subset {
        if let Some(&s) = slot.get(&ctx.pairs[i].task) {
            subs[s].pairs.push(i);
        }
    }
    Ok(subs)
}

/// Splits the instance's tasks into about `g` spatially compact groups.
pub fn decompose(instance: &Instance, g: usize) -> Result<Vec<Subproblem>> {
    let ctx = Ctx {
        pairs: &instance.pairs,
        locs: task_locations(instance),
        budget_max: 0.0,
        delta: 0.5,
        pruning: true,
        counters: PruneCounters::default(),
    };
    let subset: Vec<usize> = (0..instance.pairs.len()).collect();
    let mut tasks: Vec<TaskId> = instance.tasks.iter().map(|t| t.id).collect();
    for t in tasks_of(&instance.pairs, &subset) {
        if !tasks.contains(&t) {
            tasks.push(t);
        }
    }
    split(&ctx, &tasks, &subset, g)
}

fn committed_lb(pairs: &[CandidatePair], sides: &[&[usize]], skip: &[usize]) -> f64 {
    sides
        .iter()
        .flat_map(|s| s.iter())
        .filter(|i| !skip.contains(i))
        .map(|&i| pairs[i].cost.lb())
        .sum()
}

/// True when the pair already in `acc` should be kept over the one in `part`.
fn keep_first(ctx: &Ctx<'_>, ia: usize, ib: usize, committed: f64) -> bool {
    let (a, b) = (&ctx.pairs[ia], &ctx.pairs[ib]);
    if dominates(a, b) {
        return true;
    }
    if dominates(b, a) {
        return false;
    }
    if prob_dominates(a, b) {
        return true;
    }
    if prob_dominates(b, a) {
        return false;
    }
    match select_best_index(&[a, b], committed, ctx.budget_max, ctx.delta) {
        Some(k) => k == 0,
        None => match b.quality.mean().total_cmp(&a.quality.mean()) {
            Ordering::Greater => false,
            Ordering::Less => true,
            Ordering::Equal => b.cost.mean() >= a.cost.mean(),
        },
    }
}

fn merge_idx(ctx: &Ctx<'_>, by_task: &HashMap<TaskId, Vec<usize>>, mut acc: Vec<usize>, mut part: Vec<usize>) -> Vec<usize> {
    let pairs = ctx.pairs;
    let acc_workers: HashSet<WorkerId> = acc.iter().map(|&i| pairs[i].worker).collect();
    let mut conflicts: Vec<usize> = part.iter().copied().filter(|&i| acc_workers.contains(&pairs[i].worker)).collect();
    conflicts.sort_by(|&x, &y| {
        pairs[y]
            .cost
            .mean()
            .total_cmp(&pairs[x].cost.mean())
            .then(pairs[x].worker.cmp(&pairs[y].worker))
    });
    for ib in conflicts {
        let w = pairs[ib].worker;
        let ia = *acc.iter().find(|&&i| pairs[i].worker == w).expect("conflicting worker is in acc");
        let committed = committed_lb(pairs, &[&acc, &part], &[ia, ib]);
        let acc_wins = keep_first(ctx, ia, ib, committed);
        let (loser, side) = if acc_wins { (ib, &mut part) } else { (ia, &mut acc) };
        side.retain(|&i| i != loser);
        let task = pairs[loser].task;
        let used: HashSet<WorkerId> = acc.iter().chain(part.iter()).map(|&i| pairs[i].worker).collect();
        let options: Vec<usize> = by_task
            .get(&task)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&i| !used.contains(&pairs[i].worker))
            .collect();
        let refs: Vec<&CandidatePair> = options.iter().map(|&i| &pairs[i]).collect();
        let committed = committed_lb(pairs, &[&acc, &part], &[]);
        if let Some(k) = select_best_index(&refs, committed, ctx.budget_max, ctx.delta) {
            if acc_wins {
                part.push(options[k]);
            } else {
                acc.push(options[k]);
            }
        }
    }
    acc.extend(part);
    acc
}

fn select_within_budget(ctx: &mut Ctx<'_>, rlt: &[usize]) -> Vec<usize> {
    let mut counters = PruneCounters::default();
    let out = iterative_selection(ctx.pairs, rlt, ctx.budget_max, ctx.delta, ctx.pruning, rlt.len(), &mut counters);
    ctx.counters.add(&counters);
    out
}

fn solve_scope(ctx: &mut Ctx<'_>, tasks: &[TaskId], subset: &[usize]) -> Vec<usize> {
    if tasks.len() <= 1 {
        let mut counters = PruneCounters::default();
        let rounds = usize::from(!subset.is_empty());
        let out = iterative_selection(ctx.pairs, subset, ctx.budget_max, ctx.delta, ctx.pruning, rounds, &mut counters);
        ctx.counters.add(&counters);
        return out;
    }
    let workers: HashSet<WorkerId> = subset.iter().map(|&i| ctx.pairs[i].worker).collect();
    let deg = subset.len() as f64 / tasks.len() as f64;
    let g = best_g(tasks.len(), workers.len(), deg);
    let subs = split(ctx, tasks, subset, g).expect("best_g returns at least 2");
    let by_task: HashMap<TaskId, Vec<usize>> = subset.iter().fold(HashMap::new(), |mut m, &i| {
        m.entry(ctx.pairs[i].task).or_insert_with(Vec::new).push(i);
        m
    });
    let parts: Vec<Vec<usize>> = subs.iter().map(|s| solve_scope(ctx, &s.tasks, &s.pairs)).collect();
    let mut rlt = Vec::new();
    for part in parts {
        rlt = merge_idx(ctx, &by_task, rlt, part);
    }
    let ub: f64 = rlt.iter().map(|&i| ctx.pairs[i].cost.ub()).sum();
    if ub <= ctx.budget_max {
        rlt
    } else {
        select_within_budget(ctx, &rlt)
    }
}

pub fn solve_dnc(instance: &Instance, params: &SolveParams) -> SolverOutcome {
    let start = Instant::now();
    let pairs = &instance.pairs;
    let mut ctx = Ctx {
        pairs,
        locs: task_locations(instance),
        budget_max: params.budget_max,
        delta: params.delta,
        pruning: params.pruning,
        counters: PruneCounters::default(),
    };
    let subset: Vec<usize> = (0..pairs.len()).collect();
    let mut tasks = tasks_of(pairs, &subset);
    tasks.sort_by(|&a, &b| ctx.sweep_cmp(a, b));
    let chosen = solve_scope(&mut ctx, &tasks, &subset);
    let selected = chosen.into_iter().map(|i| pairs[i].clone()).collect();
    let assignment = finalize(selected, params.budget);
    SolverOutcome::new(assignment, start.elapsed(), ctx.counters)
}

/// Merges two conflict-free partial assignments over disjoint task sets.
/// `pool` supplies substitute pairs for tasks that lose their worker.
pub fn merge(acc: &Assignment, part: &Assignment, pool: &[CandidatePair], budget_max: f64, delta: f64) -> Assignment {
    let mut pairs: Vec<CandidatePair> = Vec::new();
    let mut index: HashMap<(WorkerId, TaskId), usize> = HashMap::new();
    let mut add = |p: &CandidatePair, pairs: &mut Vec<CandidatePair>| {
        *index.entry((p.worker, p.task)).or_insert_with(|| {
            pairs.push(p.clone());
            pairs.len() - 1
        })
    };
    let acc_idx: Vec<usize> = acc.pairs().iter().map(|p| add(p, &mut pairs)).collect();
    let part_idx: Vec<usize> = part.pairs().iter().map(|p| add(p, &mut pairs)).collect();
    let pool_idx: Vec<usize> = pool.iter().map(|p| add(p, &mut pairs)).collect();
    let mut by_task: HashMap<TaskId, Vec<usize>> = HashMap::new();
    for &i in &pool_idx {
        by_task.entry(pairs[i].task).or_default().push(i);
    }
    let ctx = Ctx {
        pairs: &pairs,
        locs: HashMap::new(),
        budget_max,
        delta,
        pruning: true,
        counters: PruneCounters::default(),
    };
    let merged = merge_idx(&ctx, &by_task, acc_idx, part_idx);
    let mut out = Assignment::new();
    for i in merged {
        out.insert(pairs[i].clone()).expect("merge output is conflict-free");
    }
    out
}

/// Reselects from a conflict-free candidate set until the pooled budget is met.
pub fn budget_constrained_selection(rlt: &[CandidatePair], budget_max: f64, delta: f64) -> Assignment {
    let subset: Vec<usize> = (0..rlt.len()).collect();
    let mut counters = PruneCounters::default();
    let chosen = iterative_selection(rlt, &subset, budget_max, delta, true, rlt.len(), &mut counters);
    let mut out = Assignment::new();
    for i in chosen {
        out.insert(rlt[i].clone()).expect("input is conflict-free");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::exact_pair;
    use crate::model::Task;

    fn appendix() -> Vec<CandidatePair> {
        vec![
            exact_pair(1, 1, 1.0, 3.0),
            exact_pair(1, 2, 3.0, 1.0),
            exact_pair(2, 1, 3.0, 2.0),
            exact_pair(2, 2, 1.0, 4.0),
            exact_pair(2, 3, 5.0, 4.0),
            exact_pair(3, 3, 4.0, 2.0),
        ]
    }

    fn solve(pairs: Vec<CandidatePair>, budget: f64) -> SolverOutcome {
        solve_dnc(&Instance::from_pairs(0.0, vec![], vec![], pairs), &SolveParams::new(budget))
    }

    fn ids(a: &Assignment) -> Vec<(u32, u32)> {
        a.pair_ids().iter().map(|(w, t)| (w.0, t.0)).collect()
    }

    #[test]
    fn appendix_tables() {
        let out = solve(appendix(), 9.0);
        assert_eq!(out.total_quality, 9.0);
        assert_eq!(ids(&out.assignment), vec![(1, 1), (2, 2), (3, 3)]);
        assert_eq!(solve(appendix(), 2.0).total_quality, 7.0);
    }

    #[test]
    fn single_task_matches_greedy() {
        let pairs = vec![exact_pair(1, 1, 2.0, 1.5), exact_pair(2, 1, 1.0, 1.2), exact_pair(3, 1, 9.0, 3.0)];
        let inst = Instance::from_pairs(0.0, vec![], vec![], pairs);
        for b in [0.5, 1.0, 2.0, 10.0] {
            let p = SolveParams::new(b);
            assert_eq!(
                solve_dnc(&inst, &p).assignment.pair_ids(),
                super::super::solve_greedy(&inst, &p).assignment.pair_ids()
            );
        }
    }

    #[test]
    fn decomposition_partitions_tasks() {
        let tasks: Vec<Task> = (0..7).map(|i| Task::new(i, Location::new(i as f64 * 0.1, 0.5), 9.0, 0.0)).collect();
        let pairs: Vec<CandidatePair> = (0..7).flat_map(|t| (0..3).map(move |w| exact_pair(w, t, 1.0, 1.0))).collect();
        let inst = Instance::from_pairs(0.0, vec![], tasks, pairs);
        let subs = decompose(&inst, 3).unwrap();
        let mut all: Vec<u32> = subs.iter().flat_map(|s| s.tasks.iter().map(|t| t.0)).collect();
        all.sort();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert_eq!(subs.iter().map(|s| s.tasks.len()).collect::<Vec<_>>(), vec![3, 3, 1]);
        assert_eq!(subs[0].tasks.iter().map(|t| t.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(subs.iter().all(|s| s.pairs.len() == 3 * s.tasks.len()));

        let three = Instance::from_pairs(0.0, vec![], vec![], appendix());
        assert!(decompose(&three, 3).unwrap().iter().all(|s| s.tasks.len() == 1));
        assert!(decompose(&three, 10).unwrap().iter().all(|s| s.tasks.len() == 1));
        assert!(matches!(decompose(&three, 1), Err(Error::InvalidSubproblemCount(1))));
    }

    #[test]
    fn merge_cases() {
        let pool = vec![
            exact_pair(1, 1, 1.0, 3.0),
            exact_pair(1, 2, 3.0, 2.0),
            exact_pair(2, 2, 2.0, 1.5),
            exact_pair(3, 3, 1.0, 1.0),
        ];
        let one = |p: &CandidatePair| -> Assignment {
            let mut a = Assignment::new();
            a.insert(p.clone()).unwrap();
            a
        };
        // disjoint workers: plain union
        let m = merge(&one(&pool[0]), &one(&pool[3]), &pool, 100.0, 0.5);
        assert_eq!(ids(&m), vec![(1, 1), (3, 3)]);
        // w1 on t1 dominates w1 on t2; t2 falls back to w2
        let m = merge(&one(&pool[0]), &one(&pool[1]), &pool, 100.0, 0.5);
        assert_eq!(ids(&m), vec![(1, 1), (2, 2)]);
        // same conflict without a substitute leaves t2 open
        let m = merge(&one(&pool[0]), &one(&pool[1]), &pool[..2], 100.0, 0.5);
        assert_eq!(ids(&m), vec![(1, 1)]);
        // the incoming pair wins when it dominates
        let m = merge(&one(&pool[1]), &one(&pool[0]), &pool, 100.0, 0.5);
        assert_eq!(ids(&m), vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn budget_constrained_examples() {
        let rlt = vec![exact_pair(1, 1, 1.0, 3.0), exact_pair(2, 2, 1.0, 4.0), exact_pair(3, 3, 4.0, 2.0)];
        let a = budget_constrained_selection(&rlt, 3.0, 0.5);
        assert_eq!(ids(&a), vec![(1, 1), (2, 2)]);
        assert_eq!((a.total_cost_mean(), a.total_quality_mean()), (2.0, 7.0));
        assert_eq!(budget_constrained_selection(&rlt, 100.0, 0.5).len(), 3);
        assert!(budget_constrained_selection(&rlt, 0.0, 0.5).is_empty());
    }
}
