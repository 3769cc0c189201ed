//! Scenarios, the closed-loop simulation, logging, metrics and the runtime
//! check suites.

mod audit;
mod checks;
mod log;
mod metrics;
mod scenario;
mod sim;
mod sweep;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{angular_momentum_audit, elastic_energy_audit, AuditReport};
pub use checks::{run_checks, CheckReport, CheckSuite};
pub use log::{write_csv, LogRow, SimLog, CSV_COLUMNS, CSV_HEADER};
pub use metrics::{metrics, rms_split, Metrics, TRANSIENT_WINDOW};
pub use scenario::{
    CableMode, ElasticConfig, GainConfig, InitialConfig, OutputConfig, PayloadConfig, Scenario,
    DEFAULT_CONFIG,
};
pub use sim::{run_scenario, Failure, Monitors, SimResult};
pub use sweep::{comparison_table, run_sweep, write_run, Summary, SweepEntry};
pub use trajectory::{desired_trajectory, TrajectoryConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(String),
}

/// Machine-readable cause of an aborted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    NonFinite,
    Singularity,
    Kinematics,
    Allocation,
    Divergence,
    Config,
}
