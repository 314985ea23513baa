//! Moments of predicted travel costs and normal-approximation comparisons of
//! uncertain values.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Location, Task, UncertainScalar, Worker};

/// Axis-aligned box over which a predicted coordinate is uniformly distributed.
/// A zero-width box is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformBox {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl UniformBox {
    pub fn new(center: Location, half_width: [f64; 2]) -> Self {
        let h = [half_width[0].max(0.0), half_width[1].max(0.0)];
        Self {
            lo: [center.x - h[0], center.y - h[1]],
            hi: [center.x + h[0], center.y + h[1]],
        }
    }

    pub fn point(loc: Location) -> Self {
        Self::new(loc, [0.0; 2])
    }

    /// Intersection with the unit square. A box entirely outside collapses
    /// onto the nearest boundary point.
    pub fn clipped(self) -> Self {
        let mut out = self;
        for r in 0..2 {
            out.lo[r] = self.lo[r].clamp(0.0, 1.0);
            out.hi[r] = self.hi[r].clamp(0.0, 1.0);
        }
        out
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }
    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    pub fn center(&self) -> Location {
        Location::new((self.lo[0] + self.hi[0]) / 2.0, (self.lo[1] + self.hi[1]) / 2.0)
    }

    pub fn half_width(&self) -> [f64; 2] {
        [(self.hi[0] - self.lo[0]) / 2.0, (self.hi[1] - self.lo[1]) / 2.0]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            lo: [self.lo[0] + dx, self.lo[1] + dy],
            hi: [self.hi[0] + dx, self.hi[1] + dy],
        }
    }
}

/// `E[X^k]` for `X ~ U[lb, ub]`. Written as `sum ub^i lb^(k-i) / (k+1)` so
/// that it stays exact when the interval collapses to a point.
pub fn uniform_raw_moment(lb: f64, ub: f64, k: u32) -> f64 {
    debug_assert!(lb <= ub);
    let sum: f64 = (0..=k).map(|i| ub.powi(i as i32) * lb.powi((k - i) as i32)).sum();
    sum / f64::from(k + 1)
}

fn binomial4(k: u32) -> f64 {
    [1.0, 4.0, 6.0, 4.0, 1.0][k as usize]
}

/// Mean and variance of the squared distance between independent uniform
/// points drawn from `a` and `b`.
pub fn squared_distance_moments(a: &UniformBox, b: &UniformBox) -> (f64, f64) {
    let mut mean = 0.0;
    let mut var = 0.0;
    for r in 0..2 {
        // Shift both coordinates by a's center; Z_r is unchanged and the raw
        // moments stay small, which keeps the fourth-moment expansion stable.
        let s = (a.lo[r] + a.hi[r]) / 2.0;
        let (a0, a1) = (a.lo[r] - s, a.hi[r] - s);
        let (b0, b1) = (b.lo[r] - s, b.hi[r] - s);
        let ea = |k| uniform_raw_moment(a0, a1, k);
        let eb = |k| uniform_raw_moment(b0, b1, k);
        let ez2 = ea(2) - 2.0 * ea(1) * eb(1) + eb(2);
        // E[(A - B)^4] = sum_k C(4,k) E[A^k] E[(-B)^(4-k)]
        let ez4: f64 = (0..=4u32)
            .map(|k| {
                let sign = if (4 - k) % 2 == 0 { 1.0 } else { -1.0 };
                binomial4(k) * sign * ea(k) * eb(4 - k)
            })
            .sum();
        mean += ez2;
        var += (ez4 - ez2 * ez2).max(0.0);
    }
    (mean.max(0.0), var)
}

fn box_gap(a: &UniformBox, b: &UniformBox) -> [f64; 2] {
    let mut gap = [0.0; 2];
    for (r, g) in gap.iter_mut().enumerate() {
        *g = (a.lo[r] - b.hi[r]).max(b.lo[r] - a.hi[r]).max(0.0);
    }
    gap
}

fn box_span(a: &UniformBox, b: &UniformBox) -> [f64; 2] {
    let mut span = [0.0; 2];
    for (r, s) in span.iter_mut().enumerate() {
        *s = (a.hi[r] - b.lo[r]).abs().max((b.hi[r] - a.lo[r]).abs());
    }
    span
}

/// Travel-cost scalar between two boxes. The distance moments come from the
/// squared-distance moments through a first-order square-root transform.
pub fn cost_scalar_for_pair(a: &UniformBox, b: &UniformBox, unit_price: f64) -> UncertainScalar {
    let gap = box_gap(a, b);
    let span = box_span(a, b);
    let lb = unit_price * gap[0].hypot(gap[1]);
    let ub = unit_price * span[0].hypot(span[1]);
    let (ez2, vz2) = squared_distance_moments(a, b);
    if ez2 <= 0.0 {
        return UncertainScalar::moments(0.0, 0.0, lb, ub);
    }
    let mean = unit_price * ez2.sqrt();
    let var = unit_price * unit_price * vz2 / (4.0 * ez2);
    UncertainScalar::moments(mean, var, lb, ub)
}

/// Cost of sending `worker` to `task`: exact for observed entities, box-based
/// once either side is predicted.
pub fn pair_cost(worker: &Worker, task: &Task, unit_price: f64) -> UncertainScalar {
    if !worker.predicted && !task.predicted {
        return UncertainScalar::exact(unit_price * crate::model::euclidean_distance(worker.loc, task.loc));
    }
    let a = UniformBox::new(worker.loc, worker.half_width).clipped();
    let b = UniformBox::new(task.loc, task.half_width).clipped();
    cost_scalar_for_pair(&a, &b, unit_price)
}

pub fn sampled_scalar(samples: Vec<(f64, f64)>) -> Result<UncertainScalar> {
    UncertainScalar::sampled(samples)
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `Pr{x > y}` under a normal approximation of `x - y`.
pub fn prob_quality_greater(x: &UncertainScalar, y: &UncertainScalar) -> f64 {
    let d = x.mean() - y.mean();
    let s = (x.variance() + y.variance()).sqrt();
    if s == 0.0 {
        return if d > 0.0 {
            1.0
        } else if d < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    std_normal_cdf(d / s)
}

/// `Pr{x <= y}` under a normal approximation of `x - y`.
pub fn prob_cost_less_equal(x: &UncertainScalar, y: &UncertainScalar) -> f64 {
    let d = x.mean() - y.mean();
    let s = (x.variance() + y.variance()).sqrt();
    if s == 0.0 {
        return if d <= 0.0 { 1.0 } else { 0.0 };
    }
    std_normal_cdf(-d / s)
}

/// `Pr{committed + cost <= budget_max}`.
pub fn prob_budget_feasible(committed_lb: f64, cost: &UncertainScalar, budget_max: f64) -> f64 {
    let slack = budget_max - committed_lb;
    let sd = cost.variance().sqrt();
    if sd == 0.0 {
        return if cost.mean() <= slack { 1.0 } else { 0.0 };
    }
    std_normal_cdf((slack - cost.mean()) / sd)
}
