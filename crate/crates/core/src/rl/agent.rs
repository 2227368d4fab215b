//! The A2C agent: sampling, u-step advantage updates and checkpoints.

use std::collections::VecDeque;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{Mlp, PolicyNet, ValueNet};
use super::{
    bootstrapped_return, AgentState, Hyperparams, RewardLedger, RlError, ACTIONS, STATE_LEN,
};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Transition {
    t: u64,
    state: AgentState,
    action: usize,
    reward: f64,
}

/// One applied (or skipped) weight update for the step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub t: u64,
    pub advantage: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub t: u64,
    pub reward: f64,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub hp: Hyperparams,
    pub policy: PolicyNet,
    pub value: ValueNet,
    pub ledger: RewardLedger,
    rng: ChaCha8Rng,
    pending: Option<(AgentState, usize)>,
    window: VecDeque<Transition>,
    last_action: Option<usize>,
}

#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub agent: Agent,
}

impl Agent {
    pub fn new(hp: Hyperparams, seed: u64) -> Result<Agent, RlError> {
        hp.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = PolicyNet(Mlp::new(
            STATE_LEN,
            hp.hidden,
            ACTIONS,
            hp.init_scale,
            &mut rng,
        ));
        let value = ValueNet(Mlp::new(STATE_LEN, hp.hidden, 1, hp.init_scale, &mut rng));
        Ok(Agent {
            hp,
            policy,
            value,
            ledger: RewardLedger::default(),
            rng,
            pending: None,
            window: VecDeque::new(),
            last_action: None,
        })
    }

    pub fn last_action(&self) -> Option<usize> {
        self.last_action
    }

    /// Samples a 0-based action; the very first one is uniform.
    pub fn select(&mut self, state: &AgentState) -> usize {
        let action = if self.ledger.t == 0 && self.pending.is_none() && self.last_action.is_none() {
            self.rng.random_range(0..ACTIONS)
        } else {
            let probs = self.policy.probs(&state.0);
            let u: f64 = self.rng.random();
            let mut acc = 0.0;
            probs
                .iter()
                .position(|p| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(ACTIONS - 1)
        };
        self.pending = Some((state.clone(), action));
        self.last_action = Some(action);
        action
    }

    /// Feeds back the ΔQ of the pending selection. Updates step `t - u` once
    /// `u + 1` rewards are known.
    pub fn observe(&mut self, delta_q: f64) -> Result<StepOutcome, RlError> {
        let (state, action) = self.pending.take().expect("observe without select");
        let t = self.ledger.t + 1;
        self.ledger.record(action, delta_q);
        let reward = self.ledger.actual_reward(action)?;
        self.window.push_back(Transition {
            t,
            state,
            action,
            reward,
        });
        let mut updates = Vec::new();
        if self.window.len() > self.hp.lookahead {
            let rewards: Vec<f64> = self.window.iter().map(|w| w.reward).collect();
            let last = self.value.value(&self.window[self.hp.lookahead].state.0);
            let first = self.window.pop_front().expect("non-empty");
            updates.push(self.update(&first, &rewards, last));
        }
        Ok(StepOutcome { t, reward, updates })
    }

    /// Applies the remaining updates with shrinking lookahead and a zero
    /// terminal value.
    pub fn finish(&mut self) -> Vec<Update> {
        let mut out = Vec::new();
        while let Some(first) = self.window.pop_front() {
            let rewards: Vec<f64> = std::iter::once(first.reward)
                .chain(self.window.iter().map(|w| w.reward))
                .collect();
            out.push(self.update(&first, &rewards, 0.0));
        }
        out
    }

    fn update(&mut self, tr: &Transition, rewards: &[f64], pr_last: f64) -> Update {
        let ret = bootstrapped_return(rewards, pr_last, self.hp.gamma);
        let advantage = ret - self.value.value(&tr.state.0);
        match self.apply(&tr.state, tr.action, advantage) {
            Ok(()) => Update {
                t: tr.t,
                advantage,
                skipped: false,
            },
            Err(_) => Update {
                t: tr.t,
                advantage,
                skipped: true,
            },
        }
    }

    /// One ascent step on `A log pi(a|s)` and one descent step on the
    /// critic's squared error `(V(s) - G)^2 / 2`, where `A = G - V(s)`.
    pub fn apply(
        &mut self,
        state: &AgentState,
        action: usize,
        advantage: f64,
    ) -> Result<(), RlError> {
        let gp = self.policy.log_prob_grad(&state.0, action);
        let gv = self.value.value_grad(&state.0);
        let scale = self.hp.beta * advantage;
        if !scale.is_finite() || gp.iter().chain(&gv).any(|g| !(g * scale).is_finite()) {
            return Err(RlError::NonFiniteGradient);
        }
        self.policy.0.step(&gp, scale);
        self.value.0.step(&gv, scale);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), RlError> {
        let cp = Checkpoint {
            version: CHECKPOINT_VERSION,
            agent: self.clone(),
        };
        let text = serde_json::to_string(&cp).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| RlError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Agent, RlError> {
        let text = std::fs::read_to_string(path).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        let cp: Checkpoint =
            serde_json::from_str(&text).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(RlError::Checkpoint(format!(
                "unsupported version {}",
                cp.version
            )));
        }
        Ok(cp.agent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::advantage_loss;

    fn zero_state() -> AgentState {
        AgentState(vec![0.0; STATE_LEN])
    }

    fn some_state() -> AgentState {
        AgentState((0..STATE_LEN).map(|i| (i as f64 * 0.37).sin()).collect())
    }

    #[test]
    fn fresh_policy_is_uniform_at_zero_state() {
        let mut a = Agent::new(Hyperparams::default(), 5).unwrap();
        let mut counts = [0usize; ACTIONS];
        let s = zero_state();
        for _ in 0..10_000 {
            counts[a.select(&s)] += 1;
            a.pending = None;
        }
        let (p, n) = (1.0 / ACTIONS as f64, 10_000.0);
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!(
            counts
                .iter()
                .all(|c| (*c as f64 - n * p).abs() < 3.0 * sigma),
            "{counts:?}"
        );
    }

    #[test]
    fn same_seed_same_actions() {
        let run = || {
            let mut a = Agent::new(Hyperparams::default(), 9).unwrap();
            (0..20)
                .map(|i| {
                    let act = a.select(&some_state());
                    a.observe(i as f64 * 0.01).unwrap();
                    act
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn degenerate_policy_picks_forced_rule() {
        let mut a = Agent::new(Hyperparams::default(), 1).unwrap();
        a.last_action = Some(0);
        a.policy.0.b2[4] = 100.0;
        for _ in 0..50 {
            assert_eq!(a.select(&some_state()), 4);
        }
    }

    #[test]
    fn zero_advantage_keeps_weights_and_positive_raises_probability() {
        let mut a = Agent::new(Hyperparams::default(), 2).unwrap();
        let s = some_state();
        let before = a.clone();
        a.apply(&s, 3, 0.0).unwrap();
        assert_eq!(a.policy, before.policy);
        let p0 = a.policy.probs(&s.0)[3];
        a.apply(&s, 3, 1.0).unwrap();
        assert!(a.policy.probs(&s.0)[3] > p0);
        let frozen = a.clone();
        assert_eq!(a.apply(&s, 3, f64::NAN), Err(RlError::NonFiniteGradient));
        assert_eq!(a, frozen);
    }

    #[test]
    fn lookahead_window() {
        let hp = Hyperparams {
            lookahead: 2,
            ..Default::default()
        };
        let mut a = Agent::new(hp, 4).unwrap();
        let mut first_adv = None;
        for i in 0..3 {
            a.select(&some_state());
            let v0 = if i == 2 { Some(a.clone()) } else { None };
            let out = a.observe(0.1).unwrap();
            if let Some(snapshot) = v0 {
                // the update for t=1 uses R_1..R_3 and PR_3 under the current critic
                let rewards: Vec<f64> = snapshot
                    .window
                    .iter()
                    .map(|w| w.reward)
                    .chain([out.reward])
                    .collect();
                let pr = |s: &AgentState| snapshot.value.value(&s.0);
                let expected = advantage_loss(&rewards, pr(&some_state()), pr(&some_state()), 0.9);
                first_adv = Some((out.updates[0].advantage, expected));
            } else {
                assert!(out.updates.is_empty());
            }
        }
        let (got, want) = first_adv.unwrap();
        assert!((got - want).abs() < 1e-12);
        assert_eq!(a.finish().len(), 2);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Agent::new(Hyperparams::default(), 11).unwrap();
        for _ in 0..8 {
            a.select(&some_state());
            a.observe(0.2).unwrap();
        }
        let path = dir.path().join("agent.json");
        a.save(&path).unwrap();
        let mut b = Agent::load(&path).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.select(&some_state()), b.select(&some_state()));
        std::fs::write(
            &path,
            std::fs::read_to_string(&path)
                .unwrap()
                .replacen("\"version\":1", "\"version\":9", 1),
        )
        .unwrap();
        assert!(matches!(Agent::load(&path), Err(RlError::Checkpoint(_))));
    }
}
