//! Workloads, the simulation loop and reporting.

pub mod bench;
pub mod checkins;
pub mod report;
pub mod sim;
pub mod workload;

pub use bench::{parse_sweep, run_bench, Axis, BenchRow, BenchSpec};
pub use checkins::{load_checkins, parse_checkins, CheckinLoad, CheckinRole};
pub use report::{cell_relative_error, emit_report, relative_error, render_report, InstanceMetrics, ReportFormat, Summary};
pub use sim::{prediction_errors, run_simulation, run_simulation_with, AdaptiveMode, PredictionError, PredictionMode, SimOptions, SimRun};
pub use workload::{generate_poisson, generate_synthetic, read_workload, write_workload, ArrivalStream, Arrivals, PairEntry, PoissonSpec};
