use std::path::PathBuf;

use thiserror::Error;

use crate::model::{TaskId, WorkerId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("worker {0} is already assigned")]
    WorkerTaken(WorkerId),

    #[error("task {0} is already assigned")]
    TaskTaken(TaskId),

    #[error("exact travel cost requested for a predicted entity")]
    PredictedEntity,

    #[error("empty sample list")]
    EmptySamples,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance too large for {solver}: {detail}")]
    InstanceTooLarge { solver: &'static str, detail: String },

    #[error("subproblem count must be at least 2, got {0}")]
    InvalidSubproblemCount(usize),

    #[error("no valid check-in rows in {path} ({skipped} malformed rows skipped)")]
    NoCheckins { path: PathBuf, skipped: usize },

    #[error("malformed workload line {line}: {reason}")]
    Workload { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
