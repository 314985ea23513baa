//! Arrival streams: synthetic generators and the JSON-lines workload format.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, Zipf};
use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, SpatialDistribution, ValueRange};
use crate::error::{Error, Result};
use crate::instance::{GeometricModel, PairModel, TableModel};
use crate::model::{Location, Task, Worker};

/// Workers and tasks that first appear at one instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Arrivals {
    pub workers: Vec<Worker>,
    pub tasks: Vec<Task>,
}

/// Explicit cost and quality for one worker-task pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub worker: u32,
    pub task: u32,
    pub cost: f64,
    pub quality: f64,
}

/// Per-instance arrivals for instances `1..=len`. An optional pair table
/// replaces the geometric cost and quality model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArrivalStream {
    pub instances: Vec<Arrivals>,
    pub pairs: Vec<PairEntry>,
}

impl ArrivalStream {
    pub fn empty(instances: usize) -> Self {
        Self {
            instances: vec![Arrivals::default(); instances],
            pairs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Arrivals at instance `p` (1-based).
    pub fn at(&self, p: usize) -> &Arrivals {
        &self.instances[p - 1]
    }

    pub fn num_workers(&self) -> usize {
        self.instances.iter().map(|a| a.workers.len()).sum()
    }

    pub fn num_tasks(&self) -> usize {
        self.instances.iter().map(|a| a.tasks.len()).sum()
    }

    /// Combines the workers of `self` with the tasks of `other`, instance by
    /// instance.
    pub fn with_tasks_of(mut self, other: ArrivalStream) -> Self {
        let len = self.len().max(other.len());
        self.instances.resize(len, Arrivals::default());
        for (a, b) in self.instances.iter_mut().zip(other.instances) {
            a.tasks = b.tasks;
        }
        self
    }

    /// The pair table when present, otherwise Euclidean costs with seeded
    /// qualities.
    pub fn pair_model(&self, config: &SimConfig) -> Box<dyn PairModel + Send + Sync> {
        if self.pairs.is_empty() {
            Box::new(GeometricModel {
                seed: config.seed,
                quality: config.quality,
                unit_price: config.unit_price,
                budget: config.budget,
            })
        } else {
            let mut table = TableModel::new(config.budget);
            for e in &self.pairs {
                table.insert(e.worker, e.task, e.cost, e.quality);
            }
            Box::new(table)
        }
    }
}

/// Splits `total` as evenly as possible over `parts`, earlier parts first.
pub fn even_split(total: usize, parts: usize) -> Vec<usize> {
    if parts == 0 {
        return Vec::new();
    }
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

/// Truncated Gaussian `N(mid, width^2)` restricted to the range.
pub fn truncated_gaussian<R: Rng + ?Sized>(range: ValueRange, rng: &mut R) -> f64 {
    if range.width() <= 0.0 {
        return range.lo();
    }
    let normal = Normal::new(range.mid(), range.width()).expect("finite parameters");
    loop {
        let v = normal.sample(rng);
        if range.contains(v) {
            return v;
        }
    }
}

/// Location sampler for one side of the market.
struct Spatial {
    kind: SpatialDistribution,
    gamma: usize,
    zipf: Option<Zipf<f64>>,
    gauss: Normal<f64>,
}

impl Spatial {
    fn new(kind: SpatialDistribution, gamma: usize, skew: f64) -> Self {
        let cells = (gamma * gamma) as f64;
        Self {
            kind,
            gamma,
            zipf: Zipf::new(cells, skew).ok(),
            gauss: Normal::new(0.5, 1.0).expect("finite parameters"),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Location {
        match self.kind {
            SpatialDistribution::Uniform => Location::new(rng.random(), rng.random()),
            SpatialDistribution::Gaussian => {
                let mut coord = || loop {
                    let v = self.gauss.sample(rng);
                    if (0.0..=1.0).contains(&v) {
                        return v;
                    }
                };
                let x = coord();
                Location::new(x, coord())
            }
            SpatialDistribution::Zipf => {
                let rank = self.zipf.as_ref().expect("valid zipf parameters").sample(rng) as usize;
                let cell = rank.clamp(1, self.gamma * self.gamma) - 1;
                let side = 1.0 / self.gamma as f64;
                let (ix, iy) = ((cell % self.gamma) as f64, (cell / self.gamma) as f64);
                Location::new((ix + rng.random::<f64>()) * side, (iy + rng.random::<f64>()) * side)
            }
        }
    }
}

fn make_worker<R: Rng + ?Sized>(id: u32, loc: Location, p: usize, config: &SimConfig, rng: &mut R) -> Worker {
    Worker::new(id, loc, truncated_gaussian(config.velocity, rng), p as f64)
}

fn make_task<R: Rng + ?Sized>(id: u32, loc: Location, p: usize, config: &SimConfig, rng: &mut R) -> Task {
    let offset = rng.random_range(config.deadline.lo()..=config.deadline.hi());
    Task::new(id, loc, p as f64 + offset, p as f64)
}

/// `config.workers` workers and `config.tasks` tasks spread evenly over
/// `config.instances` instances. Ids start at 1 on each side.
pub fn generate_synthetic(config: &SimConfig, seed: u64) -> Result<ArrivalStream> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ws = Spatial::new(config.worker_distribution, config.gamma, config.zipf_skew);
    let ts = Spatial::new(config.task_distribution, config.gamma, config.zipf_skew);
    let per_w = even_split(config.workers, config.instances);
    let per_t = even_split(config.tasks, config.instances);
    let mut stream = ArrivalStream::empty(config.instances);
    let (mut wid, mut tid) = (1u32, 1u32);
    for (p, arrivals) in (1..).zip(stream.instances.iter_mut()) {
        for _ in 0..per_w[p - 1] {
            let loc = ws.sample(&mut rng);
            arrivals.workers.push(make_worker(wid, loc, p, config, &mut rng));
            wid += 1;
        }
        for _ in 0..per_t[p - 1] {
            let loc = ts.sample(&mut rng);
            arrivals.tasks.push(make_task(tid, loc, p, config, &mut rng));
            tid += 1;
        }
    }
    Ok(stream)
}

/// Per-cell Poisson arrivals on a `gamma x gamma` grid. With `walk > 0` each
/// cell's rate follows an independent multiplicative random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonSpec {
    pub gamma: usize,
    pub worker_rate: f64,
    pub task_rate: f64,
    pub walk: f64,
}

pub fn generate_poisson(config: &SimConfig, spec: &PoissonSpec, seed: u64) -> Result<ArrivalStream> {
    config.validate()?;
    if spec.gamma == 0 || !(spec.worker_rate >= 0.0 && spec.task_rate >= 0.0 && spec.walk >= 0.0) {
        return Err(Error::Config("poisson rates must be nonnegative on a nonempty grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = spec.gamma * spec.gamma;
    let side = 1.0 / spec.gamma as f64;
    let mut rates = vec![(spec.worker_rate, spec.task_rate); cells];
    let step = Normal::new(0.0, spec.walk.max(f64::MIN_POSITIVE)).expect("finite parameters");
    let mut stream = ArrivalStream::empty(config.instances);
    let (mut wid, mut tid) = (1u32, 1u32);
    let draw = |rate: f64, rng: &mut ChaCha8Rng| {
        if rate > 0.0 {
            Poisson::new(rate).expect("positive rate").sample(rng) as usize
        } else {
            0
        }
    };
    for (p, arrivals) in (1..).zip(stream.instances.iter_mut()) {
        if p > 1 && spec.walk > 0.0 {
            for r in &mut rates {
                r.0 *= step.sample(&mut rng).exp();
                r.1 *= step.sample(&mut rng).exp();
            }
        }
        for (cell, &(rw, rt)) in rates.iter().enumerate() {
            let (ix, iy) = ((cell % spec.gamma) as f64, (cell / spec.gamma) as f64);
            let loc = |rng: &mut ChaCha8Rng| Location::new((ix + rng.random::<f64>()) * side, (iy + rng.random::<f64>()) * side);
            for _ in 0..draw(rw, &mut rng) {
                let l = loc(&mut rng);
                arrivals.workers.push(make_worker(wid, l, p, config, &mut rng));
                wid += 1;
            }
            for _ in 0..draw(rt, &mut rng) {
                let l = loc(&mut rng);
                arrivals.tasks.push(make_task(tid, l, p, config, &mut rng));
                tid += 1;
            }
        }
    }
    Ok(stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Role {
    Worker,
    Task,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Line {
    role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deadline: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    worker: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    task: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quality: Option<f64>,
}

impl Line {
    fn blank(role: Role) -> Self {
        Self {
            role,
            instance: None,
            id: None,
            x: None,
            y: None,
            v: None,
            deadline: None,
            worker: None,
            task: None,
            cost: None,
            quality: None,
        }
    }
}

/// Writes one JSON object per entity, then one per pair-table entry.
pub fn write_workload<W: Write>(stream: &ArrivalStream, mut out: W) -> Result<()> {
    for (p, a) in (1..).zip(&stream.instances) {
        for w in &a.workers {
            let line = Line {
                instance: Some(p),
                id: Some(w.id.0),
                x: Some(w.loc.x),
                y: Some(w.loc.y),
                v: Some(w.velocity),
                ..Line::blank(Role::Worker)
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        for t in &a.tasks {
            let line = Line {
                instance: Some(p),
                id: Some(t.id.0),
                x: Some(t.loc.x),
                y: Some(t.loc.y),
                deadline: Some(t.deadline),
                ..Line::blank(Role::Task)
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    for e in &stream.pairs {
        let line = Line {
            worker: Some(e.worker),
            task: Some(e.task),
            cost: Some(e.cost),
            quality: Some(e.quality),
            ..Line::blank(Role::Pair)
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSON-lines workload. Missing ids are numbered per side in file
/// order; missing velocities and deadlines come from the config midpoints.
/// The stream covers at least `min_instances` instances.
pub fn read_workload<R: BufRead>(input: R, config: &SimConfig, min_instances: usize) -> Result<ArrivalStream> {
    let mut stream = ArrivalStream::empty(min_instances);
    let (mut next_w, mut next_t) = (1u32, 1u32);
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Workload {
            line: k + 1,
            reason: reason.to_string(),
        };
        let rec: Line = serde_json::from_str(&line).map_err(|e| bad(&e.to_string()))?;
        if rec.role == Role::Pair {
            match (rec.worker, rec.task, rec.cost, rec.quality) {
                (Some(worker), Some(task), Some(cost), Some(quality)) => stream.pairs.push(PairEntry { worker, task, cost, quality }),
                _ => return Err(bad("pair lines need worker, task, cost and quality")),
            }
            continue;
        }
        let p = rec.instance.filter(|&p| p >= 1).ok_or_else(|| bad("instance must be at least 1"))?;
        let (x, y) = rec.x.zip(rec.y).ok_or_else(|| bad("missing coordinates"))?;
        let loc = Location::new(x, y);
        if !loc.in_unit_square() {
            return Err(bad("location outside the unit square"));
        }
        if stream.instances.len() < p {
            stream.instances.resize(p, Arrivals::default());
        }
        let now = p as f64;
        if rec.role == Role::Worker {
            let id = rec.id.unwrap_or(next_w);
            next_w = next_w.max(id + 1);
            let v = rec.v.unwrap_or(config.velocity.mid());
            stream.instances[p - 1].workers.push(Worker::new(id, loc, v, now));
        } else {
            let id = rec.id.unwrap_or(next_t);
            next_t = next_t.max(id + 1);
            let deadline = rec.deadline.unwrap_or(now + config.deadline.mid());
            stream.instances[p - 1].tasks.push(Task::new(id, loc, deadline, now));
        }
    }
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            workers: 30,
            tasks: 30,
            instances: 3,
            ..SimConfig::default()
        }
    }

    #[test]
    fn synthetic_is_reproducible_and_in_range() {
        let c = small();
        let a = generate_synthetic(&c, 7).unwrap();
        assert_eq!(a, generate_synthetic(&c, 7).unwrap());
        assert_ne!(a, generate_synthetic(&c, 8).unwrap());
        assert_eq!((a.num_workers(), a.num_tasks()), (30, 30));
        for (p, inst) in (1..).zip(&a.instances) {
            for w in &inst.workers {
                assert!(w.loc.in_unit_square() && c.velocity.contains(w.velocity));
                assert_eq!(w.arrival, p as f64);
            }
            for t in &inst.tasks {
                assert!(t.loc.in_unit_square());
                assert!(t.deadline >= p as f64 + 1.0 && t.deadline <= p as f64 + 2.0);
            }
        }
    }

    #[test]
    fn default_sizes_split_evenly() {
        let c = SimConfig::default();
        assert!(even_split(c.tasks, c.instances).iter().all(|&k| k == 200));
        assert_eq!(even_split(7, 3), vec![3, 2, 2]);
    }

    #[test]
    fn all_distributions_sample_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [SpatialDistribution::Gaussian, SpatialDistribution::Uniform, SpatialDistribution::Zipf] {
            let s = Spatial::new(kind, 20, 0.3);
            for _ in 0..1000 {
                assert!(s.sample(&mut rng).in_unit_square());
            }
        }
    }

    #[test]
    fn poisson_stationary_mean() {
        let c = SimConfig {
            instances: 4,
            ..SimConfig::default()
        };
        let spec = PoissonSpec {
            gamma: 2,
            worker_rate: 50.0,
            task_rate: 0.0,
            walk: 0.0,
        };
        let s = generate_poisson(&c, &spec, 3).unwrap();
        let mean = s.num_workers() as f64 / 16.0;
        assert!((mean - 50.0).abs() < 6.0, "{mean}");
        assert_eq!(s.num_tasks(), 0);
    }

    #[test]
    fn jsonl_round_trip() {
        let c = small();
        let mut s = generate_synthetic(&c, 2).unwrap();
        s.pairs.push(PairEntry {
            worker: 1,
            task: 2,
            cost: 1.5,
            quality: 3.0,
        });
        let mut buf = Vec::new();
        write_workload(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 61);
        let back = read_workload(buf.as_slice(), &c, 0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn jsonl_minimal_lines() {
        let c = small();
        let text = r#"{"role":"worker","instance":2,"x":0.1,"y":0.2}
{"role":"task","instance":1,"x":0.5,"y":0.5}
"#;
        let s = read_workload(text.as_bytes(), &c, 3).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.at(2).workers[0].velocity, c.velocity.mid());
        assert_eq!(s.at(1).tasks[0].deadline, 2.5);
        let err = read_workload(r#"{"role":"task","instance":0,"x":0.5,"y":0.5}"#.as_bytes(), &c, 0).unwrap_err();
        assert!(matches!(err, Error::Workload { line: 1, .. }));
    }
}
