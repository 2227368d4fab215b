//! Actor-critic prompt selection over the mutation rules.

mod agent;
mod ledger;
pub mod net;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agent::{Agent, Checkpoint, StepOutcome, Update, CHECKPOINT_VERSION};
pub use ledger::RewardLedger;
pub use net::{Mlp, PolicyNet, ValueNet};

use crate::prompt::RULE_COUNT;

pub const ACTIONS: usize = RULE_COUNT;
pub const STATE_LEN: usize = 4 + 2 * ACTIONS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RlError {
    #[error("reward requested for rule {0}, which was never selected")]
    DivisionGuard(u8),
    #[error("non-finite gradient; update skipped")]
    NonFiniteGradient,
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub gamma: f64,
    pub beta: f64,
    pub lookahead: usize,
    pub hidden: usize,
    pub init_scale: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.9,
            beta: 0.01,
            lookahead: 5,
            hidden: 32,
            init_scale: 0.1,
        }
    }
}

impl Hyperparams {
    pub fn check(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::Hyperparams(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.lookahead < 1 {
            return bad("lookahead must be at least 1");
        }
        if self.hidden < 1 {
            return bad("hidden size must be at least 1");
        }
        Ok(())
    }
}

/// Environment observation fed to both networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState(pub Vec<f64>);

impl AgentState {
    /// `[t/T_max, sim, div, n/N_max, one-hot last action, per-rule mean ΔQ]`.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        t: u64,
        t_max: u64,
        sim: f64,
        div: f64,
        n: usize,
        n_max: usize,
        last_action: Option<usize>,
        ledger: &RewardLedger,
    ) -> AgentState {
        let mut v = Vec::with_capacity(STATE_LEN);
        v.push(if t_max == 0 {
            0.0
        } else {
            t as f64 / t_max as f64
        });
        v.push(sim);
        v.push(div);
        v.push(if n_max == 0 {
            0.0
        } else {
            n as f64 / n_max as f64
        });
        v.extend((0..ACTIONS).map(|a| if Some(a) == last_action { 1.0 } else { 0.0 }));
        v.extend(ledger.means());
        AgentState(v)
    }
}

/// `Σ γ^(i-t) R_i + γ^(u+1) PR_(t+u) − PR_t` over `rewards = [R_t, ..., R_(t+u)]`.
pub fn advantage_loss(rewards: &[f64], pr_last: f64, pr_t: f64, gamma: f64) -> f64 {
    bootstrapped_return(rewards, pr_last, gamma) - pr_t
}

pub fn bootstrapped_return(rewards: &[f64], pr_last: f64, gamma: f64) -> f64 {
    let discounted: f64 = rewards
        .iter()
        .enumerate()
        .map(|(k, r)| gamma.powi(k as i32) * r)
        .sum();
    discounted + gamma.powi(rewards.len() as i32) * pr_last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_examples() {
        assert!((advantage_loss(&[1.0], 0.2, 0.2, 0.9) - 0.98).abs() < 1e-15);
        let v = 0.7;
        let a = advantage_loss(&[0.0; 6], v, v, 0.9);
        assert!((a - (0.9f64.powi(6) - 1.0) * v).abs() < 1e-15);
        assert_eq!(advantage_loss(&[0.5, 0.5], 0.0, 0.0, 1.0), 1.0);
    }

    #[test]
    fn state_layout() {
        let mut l = RewardLedger::default();
        l.record(4, 0.5);
        let s = AgentState::build(3, 10, 0.8, 0.2, 1, 10, Some(4), &l);
        assert_eq!(s.0.len(), STATE_LEN);
        assert_eq!(&s.0[..4], &[0.3, 0.8, 0.2, 0.1]);
        assert_eq!(s.0[4..4 + ACTIONS].iter().sum::<f64>(), 1.0);
        assert_eq!(s.0[4 + ACTIONS + 4], 0.5);
        let s0 = AgentState::build(0, 10, 0.0, 0.0, 0, 10, None, &RewardLedger::default());
        assert!(s0.0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hyperparam_bounds() {
        assert!(Hyperparams::default().check().is_ok());
        assert!(Hyperparams {
            gamma: 0.0,
            ..Default::default()
        }
        .check()
        .is_err());
        assert!(Hyperparams {
            lookahead: 0,
            ..Default::default()
        }
        .check()
        .is_err());
        assert!(Hyperparams {
            beta: -1.0,
            ..Default::default()
        }
        .check()
        .is_err());
    }
}
