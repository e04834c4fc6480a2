//! Fixed-step integration, configuration, scenario runs, sweeps and the
//! CSV/report surface.

pub mod config;
pub mod integrator;
pub mod output;
pub mod report;
pub mod scenario;
pub mod sweep;

use thiserror::Error;

use crate::analysis::AnalysisError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("analysis failed: {0}")]
    Analysis(#[from] AnalysisError),
}

pub use config::{Mode, SimConfig};
pub use integrator::rk4_step;
pub use output::{write_lyapunov_csv, write_sweep_csv, write_trace_csv};
pub use report::{analyze_run, RunReport};
pub use scenario::{run_scenario, SimTrace, TraceRow, TraceStatus};
pub use sweep::{sweep_disturbance, sweep_gain, GainVariant, SweepOutcome, SweepResult, SweepRow};
