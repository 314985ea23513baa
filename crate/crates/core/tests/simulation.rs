use mqa_core::harness::{
    generate_synthetic, read_workload, run_simulation, write_workload, AdaptiveMode, ArrivalStream, PairEntry, PredictionMode, SimOptions,
};
use mqa_core::solvers::SolverKind;
use mqa_core::{Location, SimConfig, Task, Worker};

fn small_config(seed: u64) -> SimConfig {
    SimConfig {
        workers: 40,
        tasks: 40,
        instances: 4,
        seed,
        ..SimConfig::default()
    }
}

fn opts(prediction: PredictionMode, adaptive: AdaptiveMode) -> SimOptions {
    SimOptions {
        prediction,
        adaptive,
        timing: false,
        ..SimOptions::default()
    }
}

#[test]
fn runs_are_deterministic_without_timing() {
    let config = small_config(11);
    let stream = generate_synthetic(&config, config.seed).unwrap();
    for kind in [SolverKind::Greedy, SolverKind::Dnc, SolverKind::Random] {
        let o = opts(PredictionMode::Grid, AdaptiveMode::Off);
        let a = run_simulation(&stream, kind, &config, &o).unwrap();
        let b = run_simulation(&stream, kind, &config, &o).unwrap();
        assert_eq!(a.metrics, b.metrics, "{kind}");
    }
}

#[test]
fn every_instance_respects_the_budget() {
    for seed in 0..3 {
        let config = SimConfig {
            budget: 8.0,
            ..small_config(seed)
        };
        let stream = generate_synthetic(&config, seed).unwrap();
        for kind in [SolverKind::Greedy, SolverKind::Dnc, SolverKind::Random] {
            for prediction in [PredictionMode::Off, PredictionMode::Grid, PredictionMode::Oracle] {
                for adaptive in [AdaptiveMode::Off, AdaptiveMode::Fast] {
                    let run = run_simulation(&stream, kind, &config, &opts(prediction, adaptive)).unwrap();
                    assert_eq!(run.metrics.len(), config.instances);
                    for m in &run.metrics {
                        assert!(m.cost <= config.budget + 1e-9, "{kind} {prediction:?} {adaptive:?}: {}", m.cost);
                        assert!(m.n_assigned <= m.n_available_w.min(m.n_available_t));
                    }
                }
            }
        }
    }
}

#[test]
fn workload_survives_a_jsonl_round_trip() {
    let config = small_config(3);
    let stream = generate_synthetic(&config, 3).unwrap();
    let mut buf = Vec::new();
    write_workload(&stream, &mut buf).unwrap();
    let back = read_workload(&buf[..], &config, config.instances).unwrap();
    assert_eq!(back, stream);
}

/// w1 with t1, t2 first; w2, w3 with t3 next. w1 needs both instances for
/// its trip, so the first decision decides which pair it serves.
fn two_instance_example() -> ArrivalStream {
    let loc = Location::new(0.5, 0.5);
    let near = Location::new(0.6, 0.5);
    let mut s = ArrivalStream::empty(2);
    s.instances[0].workers.push(Worker::new(1, loc, 0.05, 1.0));
    s.instances[0].tasks.push(Task::new(1, near, 50.0, 1.0));
    s.instances[0].tasks.push(Task::new(2, near, 50.0, 1.0));
    s.instances[1].workers.push(Worker::new(2, loc, 10.0, 2.0));
    s.instances[1].workers.push(Worker::new(3, loc, 10.0, 2.0));
    s.instances[1].tasks.push(Task::new(3, loc, 50.0, 2.0));
    let table = [
        (1, 1, 1.0, 3.0),
        (1, 2, 2.0, 2.0),
        (1, 3, 4.0, 2.0),
        (2, 1, 1.0, 4.0),
        (2, 2, 3.0, 2.0),
        (2, 3, 2.0, 1.0),
        (3, 1, 5.0, 2.0),
        (3, 2, 3.0, 1.0),
        (3, 3, 1.0, 2.0),
    ];
    s.pairs = table
        .into_iter()
        .map(|(worker, task, cost, quality)| PairEntry { worker, task, cost, quality })
        .collect();
    s
}

#[test]
fn foresight_improves_the_two_instance_example() {
    let config = SimConfig {
        budget: 10.0,
        unit_price: 1.0,
        instances: 2,
        ..SimConfig::default()
    };
    let stream = two_instance_example();
    let total = |prediction| {
        run_simulation(&stream, SolverKind::Greedy, &config, &opts(prediction, AdaptiveMode::Off))
            .unwrap()
            .total_quality()
    };
    assert_eq!(total(PredictionMode::Off), 7.0);
    assert_eq!(total(PredictionMode::Oracle), 8.0);
}
