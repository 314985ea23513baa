use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange(pub f64, pub f64);

impl ValueRange {
    pub fn lo(&self) -> f64 {
        self.0
    }
    pub fn hi(&self) -> f64 {
        self.1
    }
    pub fn mid(&self) -> f64 {
        (self.0 + self.1) / 2.0
    }
    pub fn width(&self) -> f64 {
        self.1 - self.0
    }
    pub fn contains(&self, v: f64) -> bool {
        (self.0..=self.1).contains(&v)
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.0.is_finite() && self.1.is_finite()) || self.0 > self.1 {
            return Err(Error::Config(format!("{name} range [{}, {}] is empty", self.0, self.1)));
        }
        Ok(())
    }
}

impl std::str::FromStr for ValueRange {
    type Err = Error;

    /// Parses `lo,hi` or `lo..hi`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = if s.contains("..") {
            s.split("..").collect()
        } else {
            s.split(',').collect()
        };
        let bad = || Error::Config(format!("cannot parse range {s:?}; expected lo,hi"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        Ok(Self(lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialDistribution {
    Gaussian,
    Uniform,
    Zipf,
}

impl std::str::FromStr for SpatialDistribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            "zipf" => Ok(Self::Zipf),
            other => Err(Error::Config(format!("unknown distribution {other:?}"))),
        }
    }
}

/// Simulation parameters. Defaults are the full-scale experimental settings;
/// the CLI scales the population sizes down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Per-instance travel budget B.
    pub budget: f64,
    /// Unit price C per unit of distance.
    pub unit_price: f64,
    pub velocity: ValueRange,
    pub quality: ValueRange,
    /// Deadline offset after arrival.
    pub deadline: ValueRange,
    /// Sliding window w for count forecasting.
    pub window: usize,
    /// Number of instances R.
    pub instances: usize,
    /// Grid cells per side.
    pub gamma: usize,
    /// Budget-feasibility confidence threshold.
    pub delta: f64,
    pub seed: u64,
    /// Total tasks m.
    pub tasks: usize,
    /// Total workers n.
    pub workers: usize,
    pub worker_distribution: SpatialDistribution,
    pub task_distribution: SpatialDistribution,
    pub zipf_skew: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            budget: 200.0,
            unit_price: 10.0,
            velocity: ValueRange(0.2, 0.3),
            quality: ValueRange(1.0, 2.0),
            deadline: ValueRange(1.0, 2.0),
            window: 3,
            instances: 15,
            gamma: 20,
            delta: 0.5,
            seed: 0,
            tasks: 3000,
            workers: 3000,
            worker_distribution: SpatialDistribution::Gaussian,
            task_distribution: SpatialDistribution::Zipf,
            zipf_skew: 0.3,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.velocity.check("velocity")?;
        self.quality.check("quality")?;
        self.deadline.check("deadline")?;
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.budget > 0.0) {
            return fail("budget must be positive");
        }
        if !(self.unit_price >= 0.0) {
            return fail("unit price must be nonnegative");
        }
        if !(self.velocity.lo() > 0.0) {
            return fail("velocities must be positive");
        }
        if !(self.quality.lo() >= 0.0) {
            return fail("quality scores must be nonnegative");
        }
        if !(self.deadline.lo() > 0.0) {
            return fail("deadline offsets must be positive");
        }
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if self.gamma == 0 {
            return fail("gamma must be at least 1");
        }
        if self.instances == 0 {
            return fail("at least one instance is required");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail("delta must lie in (0, 1)");
        }
        if !(self.zipf_skew >= 0.0) {
            return fail("zipf skew must be nonnegative");
        }
        Ok(())
    }

    /// Multiplies the population sizes by `factor`, rounding to the nearest
    /// integer.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.tasks = (self.tasks as f64 * factor).round() as usize;
        self.workers = (self.workers as f64 * factor).round() as usize;
        self
    }
}
