//! Chat-completion gateway: an OpenAI-compatible HTTP client, a fixture-backed
//! mock and program extraction from replies.

mod extract;
mod http;
mod mock;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use extract::extract_program;
pub use http::HttpGateway;
pub use mock::{MockGateway, ScriptedGateway};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("API error {status}: {body}")]
    Api { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("no mock fixture for prompt hash {0}")]
    NoFixture(String),
    #[error("conversation has no user message")]
    EmptyConversation,
    #[error("scripted replies exhausted")]
    ScriptExhausted,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LlmError {
    /// Whether retrying the same request may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::Transport(_) | LlmError::Timeout => true,
            LlmError::Api { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// Message history of one run. Only the last `max_history` non-system
/// messages are kept; a leading system message is always retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub messages: Vec<Message>,
    pub max_history: usize,
}

pub const DEFAULT_HISTORY: usize = 6;

impl Default for Conversation {
    fn default() -> Self {
        Conversation {
            messages: Vec::new(),
            max_history: DEFAULT_HISTORY,
        }
    }
}

impl Conversation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_system(content: impl Into<String>) -> Self {
        let mut c = Self::default();
        c.messages.push(Message {
            role: Role::System,
            content: content.into(),
        });
        c
    }

    fn push(&mut self, role: Role, content: String) {
        // keep user/assistant alternation: a second user turn in a row
        // replaces a dangling one left by a failed request
        if role == Role::User && self.messages.last().is_some_and(|m| m.role == Role::User) {
            self.messages.pop();
        }
        self.messages.push(Message { role, content });
        let system = usize::from(
            self.messages
                .first()
                .is_some_and(|m| m.role == Role::System),
        );
        let extra = (self.messages.len() - system).saturating_sub(self.max_history.max(1));
        // drop whole user/assistant pairs so the window starts with a user turn
        let extra = extra + extra % 2;
        if extra > 0 {
            let end = (system + extra).min(self.messages.len() - 1);
            self.messages.drain(system..end);
        }
    }

    pub fn push_user(&mut self, content: impl Into<String>) {
        self.push(Role::User, content.into());
    }

    pub fn push_assistant(&mut self, content: impl Into<String>) {
        self.push(Role::Assistant, content.into());
    }

    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_tokens: u32,
    /// Environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            temperature: 1.0,
            timeout_secs: 60.0,
            max_retries: 3,
            max_tokens: 4096,
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

impl ModelConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmReply {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency_ms: u64,
}

pub trait Gateway {
    fn complete(&mut self, conversation: &Conversation) -> Result<LlmReply, LlmError>;
}

impl<G: Gateway + ?Sized> Gateway for Box<G> {
    fn complete(&mut self, conversation: &Conversation) -> Result<LlmReply, LlmError> {
        (**self).complete(conversation)
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_is_capped_in_pairs() {
        let mut c = Conversation::with_system("sys");
        for i in 0..10 {
            c.push_user(format!("u{i}"));
            c.push_assistant(format!("a{i}"));
        }
        assert_eq!(c.messages.len(), 7);
        assert_eq!(c.messages[0].role, Role::System);
        assert_eq!(c.messages[1].content, "u7");
        c.push_user("u10");
        assert_eq!(c.messages[1].role, Role::User);
        assert_eq!(c.last_user(), Some("u10"));
    }

    #[test]
    fn roles_alternate_after_failed_request() {
        let mut c = Conversation::new();
        c.push_user("a");
        c.push_user("b");
        assert_eq!(c.messages.len(), 1);
        assert_eq!(c.last_user(), Some("b"));
    }

    #[test]
    fn transient_classification() {
        assert!(LlmError::Api {
            status: 503,
            body: String::new()
        }
        .is_transient());
        assert!(LlmError::Api {
            status: 429,
            body: String::new()
        }
        .is_transient());
        assert!(!LlmError::Api {
            status: 401,
            body: String::new()
        }
        .is_transient());
        assert!(LlmError::Timeout.is_transient());
    }

    #[test]
    fn default_temperature() {
        assert_eq!(ModelConfig::default().temperature, 1.0);
    }
}
