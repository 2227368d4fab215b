//! Deterministic gateways: replies looked up by prompt hash, or replayed
//! from a recorded script.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use super::{sha256_hex, Conversation, Gateway, LlmError, LlmReply};

/// Replies stored as `<sha256 of prompt>.txt`, or as a sequence
/// `<hash>.1.txt`, `<hash>.2.txt`, ... served in order and then cyclically.
///
/// The key is the hash of the last user message. When no fixture matches,
/// each suffix of the message starting after a blank line is tried, longest
/// first, so a prompt preceded by a feedback paragraph still finds its reply.
#[derive(Debug, Clone)]
pub struct MockGateway {
    dir: PathBuf,
    served: BTreeMap<String, usize>,
}

impl MockGateway {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        MockGateway {
            dir: dir.into(),
            served: BTreeMap::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn sequence(&self, hash: &str) -> Result<Vec<PathBuf>, LlmError> {
        let single = self.dir.join(format!("{hash}.txt"));
        if single.is_file() {
            return Ok(vec![single]);
        }
        let mut seq = Vec::new();
        for n in 1.. {
            let p = self.dir.join(format!("{hash}.{n}.txt"));
            if !p.is_file() {
                break;
            }
            seq.push(p);
        }
        Ok(seq)
    }

    /// Candidate lookup keys for a user message, in priority order.
    pub fn keys(message: &str) -> Vec<String> {
        let mut keys = vec![sha256_hex(message)];
        let mut from = 0;
        while let Some(i) = message[from..].find("\n\n") {
            let start = from + i + 2;
            keys.push(sha256_hex(&message[start..]));
            from = start;
        }
        keys
    }
}

impl Gateway for MockGateway {
    fn complete(&mut self, conversation: &Conversation) -> Result<LlmReply, LlmError> {
        let message = conversation
            .last_user()
            .ok_or(LlmError::EmptyConversation)?;
        let keys = Self::keys(message);
        for key in &keys {
            let seq = self.sequence(key)?;
            if seq.is_empty() {
                continue;
            }
            let n = self.served.entry(key.clone()).or_insert(0);
            let path = &seq[*n % seq.len()];
            *n += 1;
            let text = std::fs::read_to_string(path)?;
            return Ok(LlmReply {
                text,
                usage: None,
                latency_ms: 0,
            });
        }
        Err(LlmError::NoFixture(keys[0].clone()))
    }
}

/// Serves a fixed list of replies in order, regardless of the prompt.
#[derive(Debug, Clone, Default)]
pub struct ScriptedGateway {
    replies: VecDeque<String>,
}

impl ScriptedGateway {
    pub fn new(replies: impl IntoIterator<Item = String>) -> Self {
        ScriptedGateway {
            replies: replies.into_iter().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl Gateway for ScriptedGateway {
    fn complete(&mut self, _conversation: &Conversation) -> Result<LlmReply, LlmError> {
        let text = self.replies.pop_front().ok_or(LlmError::ScriptExhausted)?;
        Ok(LlmReply {
            text,
            usage: None,
            latency_ms: 0,
        })
    }
}
