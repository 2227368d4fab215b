//! The isolation report: file ranking plus a run summary.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::runlog::{StepRecord, StopReason};
use crate::harness::Classification;
use crate::sbfl::FileRanking;
use crate::spectra::QualityState;
use crate::validation::Verdict;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub queries: u64,
    pub unparseable: u64,
    pub semantic_invalid: u64,
    pub oracle_invalid: u64,
    pub valid: u64,
    pub passing: u64,
    pub failing: u64,
    pub discarded: u64,
    pub accepted: u64,
}

impl RunSummary {
    pub fn from_steps<'a>(steps: impl IntoIterator<Item = &'a StepRecord>) -> RunSummary {
        let mut s = RunSummary::default();
        for r in steps {
            s.queries += 1;
            match r.verdict {
                Verdict::Unparseable => s.unparseable += 1,
                Verdict::SemanticInvalid => s.semantic_invalid += 1,
                Verdict::OracleInvalid => s.oracle_invalid += 1,
                Verdict::Valid => s.valid += 1,
            }
            match r.classification {
                Some(Classification::Passing) => s.passing += 1,
                Some(Classification::Failing) => s.failing += 1,
                Some(Classification::Discard) => s.discarded += 1,
                None => {}
            }
            s.accepted += u64::from(r.accepted);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub bug_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub stop_reason: StopReason,
    pub summary: RunSummary,
    pub quality: QualityState,
    pub ranking: FileRanking,
    /// Rank of each ground-truth file, when ground truth was configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faulty_ranks: Option<BTreeMap<String, Option<usize>>>,
    pub config: RunConfig,
}

impl IsolationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "bug {}  seed {}  stopped by {:?}",
            self.bug_id, self.seed, self.stop_reason
        );
        let _ = writeln!(
            out,
            "queries {}: unparseable {}, semantic-invalid {}, oracle-invalid {}, valid {} (passing {}, failing {}, discarded {}), accepted {}",
            s.queries, s.unparseable, s.semantic_invalid, s.oracle_invalid, s.valid, s.passing, s.failing, s.discarded, s.accepted
        );
        let q = &self.quality;
        let _ = writeln!(
            out,
            "quality Q={:.6} sim={:.6} div={:.6} n={}\n",
            q.q, q.sim, q.div, q.n
        );
        out.push_str(&self.ranking.to_table());
        if let Some(ranks) = &self.faulty_ranks {
            out.push('\n');
            for (f, r) in ranks {
                let _ = writeln!(
                    out,
                    "faulty {f}: {}",
                    r.map_or("unranked".to_string(), |r| format!("rank {r}"))
                );
            }
        }
        out
    }
}
