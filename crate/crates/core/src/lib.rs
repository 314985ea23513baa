//! Budget-constrained spatial task assignment with arrival prediction.

pub mod adaptive;
pub mod config;
pub mod error;
pub mod harness;
pub mod instance;
pub mod model;
pub mod prediction;
pub mod solvers;
pub mod uncertainty;

pub use config::{SimConfig, SpatialDistribution, ValueRange};
pub use error::{Error, Result};
pub use model::*;
