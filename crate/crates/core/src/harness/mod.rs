//! Compiling candidates under the buggy compiler, classifying them against
//! the bug's oracle and collecting coverage spectra.

pub mod coverage;
pub mod real;
pub mod sim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::SourceProgram;

pub use coverage::{parse_line_report, parse_report, CoverageSpectrum};
pub use real::{CompilerSpec, RealBackend};
pub use sim::{Predicate, Scenario, ScenarioRule, SimulatedBackend};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no coverage reports were produced")]
    CoverageUnavailable,
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("compiler setup error: {0}")]
    Setup(String),
    #[error("timed out waiting for the coverage lock {0}")]
    LockTimeout(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Crash,
    WrongCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Passing,
    Failing,
    Discard,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Passing => "passing",
            Classification::Failing => "failing",
            Classification::Discard => "discard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileStatus {
    Ok,
    /// Ordinary rejection (diagnostics, nonzero exit).
    Rejected,
    /// Signal or internal compiler error.
    Crashed,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramRun {
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub timed_out: bool,
}

/// What happened under one option set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionRun {
    pub options: Vec<String>,
    pub compile: CompileStatus,
    pub diagnostics: String,
    /// `None` when the program was not run.
    pub run: Option<ProgramRun>,
}

/// Results for every option set, the bug-triggering one first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub runs: Vec<OptionRun>,
    pub wall_ms: u64,
}

/// Crash oracle: failing iff the compiler crashes under the first option set,
/// passing iff every set compiles cleanly. Wrong-code oracle: failing iff the
/// program's behaviour differs between option sets, passing iff it agrees.
/// Anything else (rejection, timeouts) is a discard.
pub fn classify(outcome: &ExecutionOutcome, oracle: OracleKind) -> Classification {
    let Some(first) = outcome.runs.first() else {
        return Classification::Discard;
    };
    match oracle {
        OracleKind::Crash => {
            if first.compile == CompileStatus::Crashed {
                Classification::Failing
            } else if outcome.runs.iter().all(|r| r.compile == CompileStatus::Ok) {
                Classification::Passing
            } else {
                Classification::Discard
            }
        }
        OracleKind::WrongCode => {
            let mut behaviours = Vec::new();
            for r in &outcome.runs {
                match (&r.compile, &r.run) {
                    (CompileStatus::Ok, Some(p)) if !p.timed_out => {
                        behaviours.push((p.exit_code, &p.stdout))
                    }
                    _ => return Classification::Discard,
                }
            }
            if behaviours.len() < 2 {
                return Classification::Discard;
            }
            if behaviours.iter().all(|b| *b == behaviours[0]) {
                Classification::Passing
            } else {
                Classification::Failing
            }
        }
    }
}

/// Classification plus the spectrum (present for passing and failing).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub classification: Classification,
    pub spectrum: Option<CoverageSpectrum>,
}

pub trait Backend {
    fn evaluate(&mut self, program: &SourceProgram) -> Result<Evaluation, HarnessError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn evaluate(&mut self, program: &SourceProgram) -> Result<Evaluation, HarnessError> {
        (**self).evaluate(program)
    }
}
