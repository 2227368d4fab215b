//! Spectrum-based fault localization over compiler source files.
//!
//! Only statements executed by the failing program are scored, with the
//! single-failing-test form of Ochiai `1/sqrt(1+ep)`. A file's score is the
//! mean over its failing-covered statements.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::SpectrumSet;

pub const TOP_N: [usize; 4] = [1, 5, 10, 20];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SbflError {
    #[error("file {0} has no statement covered by the failing program")]
    UncoveredFile(String),
    #[error("no file to rank")]
    Empty,
    #[error("bug {0} has no ground-truth faulty file in its ranking")]
    MissingGroundTruth(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementStat {
    pub file: String,
    pub line: u32,
    pub ep: usize,
}

pub fn statement_score(ep: usize) -> f64 {
    1.0 / ((1 + ep) as f64).sqrt()
}

/// One entry per statement of the failing spectrum, in (file, line) order.
pub fn statement_stats(set: &SpectrumSet) -> Vec<StatementStat> {
    set.failing
        .pairs()
        .map(|(file, line)| StatementStat {
            file: file.to_string(),
            line,
            ep: set
                .passing
                .iter()
                .filter(|p| p.contains(file, line))
                .count(),
        })
        .collect()
}

pub fn file_score(stats: &[StatementStat], file: &str) -> Result<f64, SbflError> {
    let scores: Vec<f64> = stats
        .iter()
        .filter(|s| s.file == file)
        .map(|s| statement_score(s.ep))
        .collect();
    if scores.is_empty() {
        return Err(SbflError::UncoveredFile(file.to_string()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Scores of every file the failing program covers.
pub fn file_scores(set: &SpectrumSet) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in statement_stats(set) {
        let e = acc.entry(s.file).or_insert((0.0, 0));
        e.0 += statement_score(s.ep);
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(f, (sum, n))| (f, sum / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFile {
    pub file: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FileRanking {
    pub entries: Vec<RankedFile>,
}

/// Scores compare equal when they agree to 12 decimal places.
fn tie_key(score: f64) -> i64 {
    (score * 1e12).round() as i64
}

pub fn rank_files(scores: &BTreeMap<String, f64>) -> Result<FileRanking, SbflError> {
    if scores.is_empty() {
        return Err(SbflError::Empty);
    }
    let mut order: Vec<(&String, f64)> = scores.iter().map(|(f, s)| (f, *s)).collect();
    order.sort_by(|a, b| tie_key(b.1).cmp(&tie_key(a.1)).then_with(|| a.0.cmp(b.0)));
    let mut entries = Vec::with_capacity(order.len());
    let mut start = 0;
    while start < order.len() {
        let key = tie_key(order[start].1);
        let end = order[start..]
            .iter()
            .position(|e| tie_key(e.1) != key)
            .map_or(order.len(), |p| start + p);
        for (file, score) in &order[start..end] {
            entries.push(RankedFile {
                file: file.to_string(),
                score: *score,
                rank: end,
            });
        }
        start = end;
    }
    Ok(FileRanking { entries })
}

impl FileRanking {
    pub fn rank_of(&self, file: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.file == file).map(|e| e.rank)
    }

    pub fn to_table(&self) -> String {
        let width = self
            .entries
            .iter()
            .map(|e| e.file.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = format!("{:>4}  {:<width$}  {}\n", "rank", "file", "score");
        for e in &self.entries {
            out.push_str(&format!(
                "{:>4}  {:<width$}  {:.6}\n",
                e.rank, e.file, e.score
            ));
        }
        out
    }
}

/// Scores and ranks the files covered by the failing program.
pub fn localize(set: &SpectrumSet) -> Result<FileRanking, SbflError> {
    rank_files(&file_scores(set))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugResult {
    pub bug: String,
    pub ranking: FileRanking,
    pub faulty: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// Bugs whose first faulty file ranks within N, for N in [`TOP_N`].
    pub top_n: BTreeMap<usize, usize>,
    pub mfr: f64,
    pub mar: f64,
    pub bugs: usize,
}

/// Ground-truth files absent from a ranking are left out of that bug's mean.
pub fn eval_metrics(results: &[BugResult]) -> Result<EvalMetrics, SbflError> {
    let mut top_n: BTreeMap<usize, usize> = TOP_N.iter().map(|n| (*n, 0)).collect();
    let (mut first_sum, mut avg_sum) = (0.0, 0.0);
    for r in results {
        let ranks: Vec<usize> = r
            .faulty
            .iter()
            .filter_map(|f| r.ranking.rank_of(f))
            .collect();
        let Some(first) = ranks.iter().min().copied() else {
            return Err(SbflError::MissingGroundTruth(r.bug.clone()));
        };
        for (n, count) in top_n.iter_mut() {
            if first <= *n {
                *count += 1;
            }
        }
        first_sum += first as f64;
        avg_sum += ranks.iter().sum::<usize>() as f64 / ranks.len() as f64;
    }
    let n = results.len().max(1) as f64;
    Ok(EvalMetrics {
        top_n,
        mfr: first_sum / n,
        mar: avg_sum / n,
        bugs: results.len(),
    })
}

/// One path per line; blank lines and `#` comments are skipped.
pub fn parse_ground_truth(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
