//! End-to-end isolation runs: configuration, the mutate/validate/reward loop,
//! the run log and the final report.

pub mod config;
pub mod report;
mod run;
pub mod runlog;

use thiserror::Error;

pub use config::{BackendKind, LlmConfig, RunConfig, SimConfig, Termination};
pub use report::{IsolationReport, RunSummary};
pub use run::{build_backend, build_gateway, prepare, replay, run, run_with, write_report};
pub use runlog::{read_log, LogRecord, RunLog, StepRecord, StopReason};

use crate::harness::HarnessError;
use crate::llm::LlmError;
use crate::prompt::PromptError;
use crate::rl::RlError;
use crate::sbfl::SbflError;
use crate::spectra::SpectraError;
use crate::validation::ValidationError;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("setup: {0}")]
    Setup(String),
    #[error("config: {0}")]
    Config(String),
    #[error("language model: {0}")]
    Gateway(LlmError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Sbfl(#[from] SbflError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("replay diverged at step {t} on `{field}`")]
    LogMismatch { t: u64, field: String },
    #[error("log was recorded with config {logged}, replay config is {given}")]
    ConfigMismatch { logged: String, given: String },
    #[error("malformed run log: {0}")]
    LogFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Problems with the inputs rather than failures during the run.
    pub fn is_setup(&self) -> bool {
        matches!(self, RunError::Setup(_) | RunError::Config(_))
    }
}
