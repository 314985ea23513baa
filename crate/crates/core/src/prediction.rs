//! Grid-based arrival forecasting and predicted-entity generation.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Location, Task, TaskId, UncertainScalar, Worker, WorkerId, PREDICTED_ID_BASE};

/// Kernel constant for a second-order uniform kernel.
pub const KERNEL_CONSTANT: f64 = 1.8431;

/// Sliding-window arrival counts over a `gamma x gamma` grid on the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    gamma: usize,
    window: usize,
    worker_history: Vec<VecDeque<u32>>,
    task_history: Vec<VecDeque<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellCounts {
    pub workers: u32,
    pub tasks: u32,
}

impl GridModel {
    pub fn new(gamma: usize, window: usize) -> Self {
        assert!(gamma >= 1 && window >= 1, "gamma and window must be positive");
        let cells = gamma * gamma;
        Self {
            gamma,
            window,
            worker_history: vec![VecDeque::with_capacity(window + 1); cells],
            task_history: vec![VecDeque::with_capacity(window + 1); cells],
        }
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }
    pub fn window(&self) -> usize {
        self.window
    }
    pub fn num_cells(&self) -> usize {
        self.gamma * self.gamma
    }

    /// Number of recorded instances still inside the window.
    pub fn history_len(&self) -> usize {
        self.worker_history.first().map_or(0, VecDeque::len)
    }

    fn axis_index(&self, v: f64) -> usize {
        let i = (v * self.gamma as f64).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.gamma - 1)
        }
    }

    /// Row-major cell index of a location.
    pub fn cell_of(&self, loc: Location) -> usize {
        self.axis_index(loc.y) * self.gamma + self.axis_index(loc.x)
    }

    /// Lower-left and upper-right corners of a cell.
    pub fn cell_rect(&self, cell: usize) -> (Location, Location) {
        let side = 1.0 / self.gamma as f64;
        let (ix, iy) = (cell % self.gamma, cell / self.gamma);
        (
            Location::new(ix as f64 * side, iy as f64 * side),
            Location::new((ix + 1) as f64 * side, (iy + 1) as f64 * side),
        )
    }

    pub fn worker_history(&self, cell: usize) -> &VecDeque<u32> {
        &self.worker_history[cell]
    }
    pub fn task_history(&self, cell: usize) -> &VecDeque<u32> {
        &self.task_history[cell]
    }

    /// Per-cell counts of the given locations.
    pub fn histogram(&self, locs: impl IntoIterator<Item = Location>) -> Vec<u32> {
        let mut counts = vec![0u32; self.num_cells()];
        for loc in locs {
            counts[self.cell_of(loc)] += 1;
        }
        counts
    }

    /// Appends the counts of this instance's new arrivals to every cell.
    pub fn record_instance(&mut self, workers: &[Worker], tasks: &[Task]) {
        let wc = self.histogram(workers.iter().map(|w| w.loc));
        let tc = self.histogram(tasks.iter().map(|t| t.loc));
        let window = self.window;
        for (hist, counts) in [(&mut self.worker_history, wc), (&mut self.task_history, tc)] {
            for (h, c) in hist.iter_mut().zip(counts) {
                h.push_back(c);
                while h.len() > window {
                    h.pop_front();
                }
            }
        }
    }

    /// Next-instance count per cell. Requires at least one recorded instance;
    /// cells without history forecast zero.
    pub fn forecast_counts(&self) -> Vec<CellCounts> {
        self.worker_history
            .iter()
            .zip(&self.task_history)
            .map(|(w, t)| CellCounts {
                workers: forecast_series(w.iter().copied()),
                tasks: forecast_series(t.iter().copied()),
            })
            .collect()
    }
}

/// Least-squares line through `(1, c_1) .. (n, c_n)` evaluated at `n + 1`,
/// rounded half up and clamped at zero.
pub fn forecast_series(history: impl IntoIterator<Item = u32>) -> u32 {
    let ys: Vec<f64> = history.into_iter().map(f64::from).collect();
    match ys.len() {
        0 => return 0,
        1 => return ys[0] as u32,
        _ => {}
    }
    let n = ys.len() as f64;
    let x_mean = (n + 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in ys.iter().enumerate() {
        let dx = (k + 1) as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let pred = y_mean + sxy / sxx * (n + 1.0 - x_mean);
    // The small nudge makes exact halves round up despite binary noise.
    let rounded = (pred + 0.5 + 1e-9).floor();
    if rounded <= 0.0 {
        0
    } else {
        rounded as u32
    }
}

/// Uniform-kernel bandwidth `sigma * C * n^(-1/5)`.
pub fn kde_bandwidth(sigma_hat: f64, n: u32) -> f64 {
    assert!(n >= 1, "bandwidth needs at least one sample");
    sigma_hat * KERNEL_CONSTANT * f64::from(n).powf(-0.2)
}

/// Population standard deviation of the coordinates, per dimension.
pub fn coordinate_std(locs: &[Location]) -> [f64; 2] {
    if locs.is_empty() {
        return [0.0; 2];
    }
    let n = locs.len() as f64;
    let mx = locs.iter().map(|l| l.x).sum::<f64>() / n;
    let my = locs.iter().map(|l| l.y).sum::<f64>() / n;
    let vx = locs.iter().map(|l| (l.x - mx).powi(2)).sum::<f64>() / n;
    let vy = locs.iter().map(|l| (l.y - my).powi(2)).sum::<f64>() / n;
    [vx.sqrt(), vy.sqrt()]
}

/// Attributes shared by every sample generated for the next instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub arrival: f64,
    pub velocity: f64,
    pub deadline_offset: f64,
    pub worker_sigma: [f64; 2],
    pub task_sigma: [f64; 2],
}

/// Draws the forecast number of workers and tasks uniformly inside each cell.
pub fn generate_predicted<R: Rng + ?Sized>(counts: &[CellCounts], grid: &GridModel, spec: &SampleSpec, rng: &mut R) -> (Vec<Worker>, Vec<Task>) {
    let mut workers = Vec::new();
    let mut tasks = Vec::new();
    for (cell, c) in counts.iter().enumerate() {
        let (lo, hi) = grid.cell_rect(cell);
        let draw = |rng: &mut R| Location::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if c.workers > 0 {
            let h = spec.worker_sigma.map(|s| kde_bandwidth(s, c.workers));
            for _ in 0..c.workers {
                let id = WorkerId(PREDICTED_ID_BASE + workers.len() as u32);
                workers.push(Worker::predicted(id, draw(rng), spec.velocity, spec.arrival, h));
            }
        }
        if c.tasks > 0 {
            let h = spec.task_sigma.map(|s| kde_bandwidth(s, c.tasks));
            for _ in 0..c.tasks {
                let id = TaskId(PREDICTED_ID_BASE + tasks.len() as u32);
                let deadline = spec.arrival + spec.deadline_offset;
                tasks.push(Task::predicted(id, draw(rng), deadline, spec.arrival, h));
            }
        }
    }
    (workers, tasks)
}

/// Which side of a pair is predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairCase {
    PredictedWorker,
    PredictedTask,
    BothPredicted,
}

/// Equal-weight quality samples; `None` when there is nothing to sample,
/// which marks the pair as nonexistent.
pub fn quality_distribution(scores: &[f64]) -> Option<UncertainScalar> {
    if scores.is_empty() {
        return None;
    }
    let w = 1.0 / scores.len() as f64;
    UncertainScalar::sampled(scores.iter().map(|&q| (q, w)).collect()).ok()
}

/// Existence probability of a pair with a predicted side. `support` is the
/// number of reachable workers, reachable tasks, or valid current pairs,
/// depending on the case.
pub fn existence_probability(case: PairCase, support: usize, n_workers: usize, n_tasks: usize) -> f64 {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    match case {
        PairCase::PredictedWorker => ratio(support, n_workers).min(1.0),
        PairCase::PredictedTask => ratio(support, n_tasks).min(1.0),
        PairCase::BothPredicted => ratio(support, n_workers * n_tasks).min(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn worker_at(x: f64, y: f64) -> Worker {
        Worker::new(0, Location::new(x, y), 0.25, 1.0)
    }

    #[test]
    fn record_and_evict() {
        let mut g = GridModel::new(2, 3);
        g.record_instance(&[], &[]);
        assert!(g.worker_history.iter().all(|h| h.iter().eq([0].iter())));
        g.record_instance(&[worker_at(0.1, 0.1), worker_at(0.2, 0.3), worker_at(0.4, 0.4)], &[]);
        assert_eq!(g.worker_history(0).back(), Some(&3));
        assert_eq!(g.worker_history(3).back(), Some(&0));
        for _ in 0..5 {
            g.record_instance(&[], &[]);
        }
        assert!(g.worker_history.iter().all(|h| h.len() == 3));
        assert_eq!(g.history_len(), 3);
    }

    #[test]
    fn cell_indexing_clamps_edges() {
        let g = GridModel::new(4, 1);
        assert_eq!(g.cell_of(Location::new(1.0, 1.0)), 15);
        assert_eq!(g.cell_of(Location::new(0.0, 0.0)), 0);
        assert_eq!(g.cell_of(Location::new(0.3, 0.6)), 2 * 4 + 1);
        let (lo, hi) = g.cell_rect(9);
        assert_eq!((lo, hi), (Location::new(0.25, 0.5), Location::new(0.5, 0.75)));
    }

    #[test]
    fn forecast_examples() {
        assert_eq!(forecast_series([1, 1, 1]), 1);
        assert_eq!(forecast_series([0, 1, 0]), 0);
        assert_eq!(forecast_series([4, 3, 4]), 4);
        assert_eq!(forecast_series([5]), 5);
        assert_eq!(forecast_series([3, 2, 1]), 0);
        assert_eq!(forecast_series([3, 2, 1, 0]), 0);
        // 1, 2 extrapolates to 3; 1, 1, 2 to 7/3
        assert_eq!(forecast_series([1, 2]), 3);
        assert_eq!(forecast_series([1, 1, 2]), 2);
        assert_eq!(forecast_series([1, 0]), 0);
        // forecasts exactly 0.5, which rounds up
        assert_eq!(forecast_series([2, 1, 1, 1]), 1);
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(kde_bandwidth(0.0, 7), 0.0);
        assert_eq!(kde_bandwidth(1.0, 1), 1.8431);
        assert!((kde_bandwidth(0.1, 32) - 0.092_155).abs() < 1e-12);
    }

    #[test]
    fn generation_respects_cells_and_counts() {
        let g = GridModel::new(3, 2);
        let mut counts = vec![CellCounts::default(); 9];
        counts[0].workers = 4;
        counts[4].tasks = 2;
        counts[8] = CellCounts { workers: 1, tasks: 3 };
        let spec = SampleSpec {
            arrival: 4.0,
            velocity: 0.25,
            deadline_offset: 1.5,
            worker_sigma: [0.1, 0.2],
            task_sigma: [0.0, 0.3],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (ws, ts) = generate_predicted(&counts, &g, &spec, &mut rng);
        assert_eq!((ws.len(), ts.len()), (5, 5));
        for w in &ws[..4] {
            assert_eq!(g.cell_of(w.loc), 0);
            assert!(w.predicted && w.velocity == 0.25 && w.arrival == 4.0);
            assert!((w.half_width[0] - kde_bandwidth(0.1, 4)).abs() < 1e-15);
        }
        for t in &ts {
            assert!(t.loc.in_unit_square());
            assert_eq!(t.deadline, 5.5);
        }
        assert_eq!(g.cell_of(ts[0].loc), 4);
        assert!(ws.iter().all(|w| w.id.0 >= PREDICTED_ID_BASE));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(generate_predicted(&counts, &g, &spec, &mut rng), (ws, ts));

        let empty = vec![CellCounts::default(); 9];
        let (ws, ts) = generate_predicted(&empty, &g, &spec, &mut rng);
        assert!(ws.is_empty() && ts.is_empty());
    }

    #[test]
    fn quality_cases() {
        let s = quality_distribution(&[3.0]).unwrap();
        assert_eq!((s.mean(), s.variance()), (3.0, 0.0));
        let s = quality_distribution(&[3.0, 4.0, 2.0]).unwrap();
        assert!((s.mean() - 3.0).abs() < 1e-12);
        assert!((s.variance() - 2.0 / 3.0).abs() < 1e-12);
        let s = quality_distribution(&[3.0, 1.0, 2.0, 4.0, 4.0, 2.0]).unwrap();
        assert!((s.mean() - 8.0 / 3.0).abs() < 1e-12);
        assert!(quality_distribution(&[]).is_none());
    }

    #[test]
    fn existence_cases() {
        assert_eq!(existence_probability(PairCase::PredictedWorker, 4, 4, 9), 1.0);
        assert_eq!(existence_probability(PairCase::PredictedWorker, 6, 4, 9), 1.0);
        assert_eq!(existence_probability(PairCase::PredictedWorker, 1, 4, 9), 0.25);
        assert_eq!(existence_probability(PairCase::PredictedTask, 1, 9, 2), 0.5);
        assert!((existence_probability(PairCase::BothPredicted, 6, 3, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn affine_histories_forecast_exactly(a in 0i64..50, b in -5i64..6, w in 2usize..6) {
                let hist: Vec<i64> = (1..=w as i64).map(|k| a + b * k).collect();
                prop_assume!(hist.iter().all(|&c| c >= 0));
                let expect = (a + b * (w as i64 + 1)).max(0) as u32;
                prop_assert_eq!(forecast_series(hist.iter().map(|&c| c as u32)), expect);
            }

            #[test]
            fn sample_total_matches_forecast(cells in proptest::collection::vec((0u32..5, 0u32..5), 16), seed in 0u64..1000) {
                let g = GridModel::new(4, 3);
                let counts: Vec<CellCounts> = cells.iter().map(|&(w, t)| CellCounts { workers: w, tasks: t }).collect();
                let spec = SampleSpec { arrival: 1.0, velocity: 0.2, deadline_offset: 1.0, worker_sigma: [0.1; 2], task_sigma: [0.1; 2] };
                let (ws, ts) = generate_predicted(&counts, &g, &spec, &mut ChaCha8Rng::seed_from_u64(seed));
                prop_assert_eq!(ws.len() as u32, cells.iter().map(|c| c.0).sum::<u32>());
                prop_assert_eq!(ts.len() as u32, cells.iter().map(|c| c.1).sum::<u32>());
                let wc = g.histogram(ws.iter().map(|w| w.loc));
                let tc = g.histogram(ts.iter().map(|t| t.loc));
                for (i, c) in counts.iter().enumerate() {
                    prop_assert_eq!(wc[i], c.workers);
                    prop_assert_eq!(tc[i], c.tasks);
                }
            }
        }
    }
}
