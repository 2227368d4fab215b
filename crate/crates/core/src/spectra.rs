//! Spectrum distances and the quality score of a passing-program set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::CoverageSpectrum;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectraError {
    #[error("the passing set is empty")]
    EmptyPassingSet,
    #[error("the failing spectrum is empty")]
    EmptyFailing,
    #[error("alpha {0} is outside [0, 1]")]
    Alpha(String),
}

/// Jaccard distance over flattened (file, line) pairs; 0 when both are empty.
pub fn jaccard_dist(a: &CoverageSpectrum, b: &CoverageSpectrum) -> f64 {
    let (inter, union) = overlap(a, b);
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Sizes of the intersection and union of two spectra.
pub fn overlap(a: &CoverageSpectrum, b: &CoverageSpectrum) -> (usize, usize) {
    let mut inter = 0;
    for (file, lines) in &a.0 {
        if let Some(other) = b.0.get(file) {
            inter += lines.intersection(other).count();
        }
    }
    (inter, a.len() + b.len() - inter)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub failing: CoverageSpectrum,
    pub passing: Vec<CoverageSpectrum>,
}

impl SpectrumSet {
    pub fn new(failing: CoverageSpectrum) -> Result<Self, SpectraError> {
        if failing.is_empty() {
            return Err(SpectraError::EmptyFailing);
        }
        Ok(SpectrumSet {
            failing,
            passing: Vec::new(),
        })
    }

    /// The same set with `candidate` appended, leaving `self` untouched.
    pub fn with(&self, candidate: CoverageSpectrum) -> SpectrumSet {
        let mut s = self.clone();
        s.passing.push(candidate);
        s
    }
}

pub fn similarity(set: &SpectrumSet) -> Result<f64, SpectraError> {
    if set.passing.is_empty() {
        return Err(SpectraError::EmptyPassingSet);
    }
    let total: f64 = set
        .passing
        .iter()
        .map(|p| 1.0 - jaccard_dist(p, &set.failing))
        .sum();
    Ok(total / set.passing.len() as f64)
}

/// Mean pairwise distance; a single spectrum has diversity 0.
pub fn diversity(set: &SpectrumSet) -> Result<f64, SpectraError> {
    let n = set.passing.len();
    if n == 0 {
        return Err(SpectraError::EmptyPassingSet);
    }
    if n == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += jaccard_dist(&set.passing[i], &set.passing[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityState {
    pub q: f64,
    pub sim: f64,
    pub div: f64,
    pub n: usize,
    pub alpha: f64,
}

impl QualityState {
    /// Before any passing program is accepted.
    pub fn initial(alpha: f64) -> Self {
        QualityState {
            q: 0.0,
            sim: 0.0,
            div: 0.0,
            n: 0,
            alpha,
        }
    }
}

pub fn check_alpha(alpha: f64) -> Result<(), SpectraError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(SpectraError::Alpha(alpha.to_string()))
    }
}

pub fn quality(set: &SpectrumSet, alpha: f64) -> Result<QualityState, SpectraError> {
    check_alpha(alpha)?;
    if set.passing.is_empty() {
        return Ok(QualityState::initial(alpha));
    }
    let (sim, div) = (similarity(set)?, diversity(set)?);
    let n = set.passing.len();
    Ok(QualityState {
        q: n as f64 * (alpha * div + (1.0 - alpha) * sim),
        sim,
        div,
        n,
        alpha,
    })
}

pub fn delta_quality(curr: &QualityState, prev: &QualityState) -> f64 {
    curr.q - prev.q
}
