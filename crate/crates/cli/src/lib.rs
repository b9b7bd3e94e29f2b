//! Experiment driver: run configuration, orchestration, output files and
//! parameter sweeps.

pub mod config;
pub mod report;
pub mod sweep;

use gridmaint_core::runtime::{run_algorithm, RunReport, RuntimeError};
use gridmaint_core::subproblem::ModelMode;
use thiserror::Error;

use config::{ConfigError, RunConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OUTPUT: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const FMRC_NOT_CONVERGED: i32 = 3;
    pub const FMBC_NOT_CONVERGED: i32 = 4;
    pub const BMBC_NOT_CONVERGED: i32 = 5;
    pub const RUNTIME: i32 = 6;
}

#[derive(Debug, Error)]
pub enum RunFailure {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("run failed: {0}")]
    Runtime(#[from] RuntimeError),
}

impl RunFailure {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunFailure::Config(_) => exit::CONFIG,
            RunFailure::Runtime(_) => exit::RUNTIME,
        }
    }
}

/// Load every input, then run. Input problems surface before any solve.
pub fn execute(cfg: &RunConfig) -> Result<RunReport, RunFailure> {
    let inputs = cfg.inputs()?;
    Ok(run_algorithm(&inputs, &cfg.settings)?)
}

/// Zero when every phase converged, otherwise the code of the first phase
/// that did not.
pub fn exit_code(r: &RunReport) -> i32 {
    for p in &r.phases {
        if !p.converged {
            return match p.mode {
                ModelMode::Fmrc => exit::FMRC_NOT_CONVERGED,
                ModelMode::Fmbc => exit::FMBC_NOT_CONVERGED,
                ModelMode::Bmbc => exit::BMBC_NOT_CONVERGED,
            };
        }
    }
    exit::OK
}
