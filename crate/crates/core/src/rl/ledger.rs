//! Per-rule reward bookkeeping: each rule's reward is the cumulative ΔQ of
//! the steps that selected it divided by its selection count.

use serde::{Deserialize, Serialize};

use super::{RlError, ACTIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardLedger {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
    pub t: u64,
}

impl Default for RewardLedger {
    fn default() -> Self {
        RewardLedger {
            sums: vec![0.0; ACTIONS],
            counts: vec![0; ACTIONS],
            t: 0,
        }
    }
}

impl RewardLedger {
    /// Records the ΔQ of one step that selected `action` (0-based).
    pub fn record(&mut self, action: usize, delta_q: f64) {
        self.sums[action] += delta_q;
        self.counts[action] += 1;
        self.t += 1;
    }

    pub fn actual_reward(&self, action: usize) -> Result<f64, RlError> {
        match self.counts[action] {
            0 => Err(RlError::DivisionGuard(action as u8 + 1)),
            n => Ok(self.sums[action] / n as f64),
        }
    }

    /// Mean ΔQ per rule, 0 for rules never selected.
    pub fn means(&self) -> Vec<f64> {
        (0..ACTIONS)
            .map(|a| self.actual_reward(a).unwrap_or(0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_examples() {
        let mut l = RewardLedger::default();
        assert_eq!(l.actual_reward(2), Err(RlError::DivisionGuard(3)));
        l.record(2, 0.5);
        assert_eq!(l.actual_reward(2), Ok(0.5));
        l.record(4, 0.9);
        l.record(2, 0.1);
        assert!((l.actual_reward(2).unwrap() - 0.3).abs() < 1e-15);
        let mut r = RewardLedger::default();
        r.record(0, 0.5);
        r.record(0, 0.0);
        assert_eq!(r.actual_reward(0), Ok(0.25));
        assert_eq!(l.t, 3);
    }
}
