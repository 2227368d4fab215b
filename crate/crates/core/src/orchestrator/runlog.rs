//! Append-only newline-delimited JSON record of a run.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::harness::Classification;
use crate::validation::Verdict;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Target,
    Budget,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub rule: u8,
    pub prompt_hash: String,
    pub reply_hash: String,
    pub reply: String,
    pub verdict: Verdict,
    pub classification: Option<Classification>,
    pub delta_q: f64,
    pub reward: f64,
    pub q: f64,
    pub accepted: bool,
    pub elapsed_ms: u64,
}

impl StepRecord {
    /// First field that differs from `other`, ignoring timing.
    pub fn mismatch(&self, other: &StepRecord) -> Option<&'static str> {
        if self.t != other.t {
            Some("t")
        } else if self.rule != other.rule {
            Some("rule")
        } else if self.prompt_hash != other.prompt_hash {
            Some("prompt_hash")
        } else if self.reply_hash != other.reply_hash {
            Some("reply_hash")
        } else if self.verdict != other.verdict {
            Some("verdict")
        } else if self.classification != other.classification {
            Some("classification")
        } else if self.delta_q.to_bits() != other.delta_q.to_bits() {
            Some("delta_q")
        } else if self.reward.to_bits() != other.reward.to_bits() {
            Some("reward")
        } else if self.q.to_bits() != other.q.to_bits() {
            Some("q")
        } else if self.accepted != other.accepted {
            Some("accepted")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        version: u32,
        bug_id: String,
        config_hash: String,
        seed: u64,
    },
    Step(StepRecord),
    End {
        reason: StopReason,
        steps: u64,
    },
    Error {
        t: u64,
        message: String,
    },
}

/// Writes each record as soon as it is produced so an aborted run keeps its
/// history.
pub struct RunLog {
    file: Option<File>,
    pub records: Vec<LogRecord>,
}

impl RunLog {
    pub fn in_memory() -> RunLog {
        RunLog {
            file: None,
            records: Vec::new(),
        }
    }

    pub fn create(path: &Path) -> Result<RunLog, RunError> {
        Ok(RunLog {
            file: Some(File::create(path)?),
            records: Vec::new(),
        })
    }

    pub fn push(&mut self, record: LogRecord) -> Result<(), RunError> {
        if let Some(f) = &mut self.file {
            let line = serde_json::to_string(&record).expect("records serialize");
            writeln!(f, "{line}")?;
            f.flush()?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Step(s) => Some(s),
            _ => None,
        })
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>, RunError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| RunError::LogFormat(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}
