//! OpenAI-compatible chat-completions client.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{Conversation, Gateway, LlmError, LlmReply, ModelConfig, Usage};

pub struct HttpGateway {
    config: ModelConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    /// Base delay of the exponential backoff.
    pub backoff: Duration,
}

impl HttpGateway {
    pub fn new(config: ModelConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        Ok(HttpGateway {
            config,
            client,
            api_key,
            backoff: Duration::from_millis(500),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn body(&self, conversation: &Conversation) -> Value {
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "messages": conversation.messages,
        })
    }

    fn attempt(&self, body: &Value, timeout: Duration) -> Result<LlmReply, LlmError> {
        let started = Instant::now();
        let mut req = self
            .client
            .post(&self.config.endpoint)
            .timeout(timeout)
            .json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Api { status, body: text });
        }
        parse_response(&text, started.elapsed())
    }
}

pub(crate) fn parse_response(text: &str, latency: Duration) -> Result<LlmReply, LlmError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LlmError::Api {
        status: 200,
        body: format!("invalid JSON ({e}): {text}"),
    })?;
    let content = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| LlmError::Api {
            status: 200,
            body: format!("no message content: {text}"),
        })?;
    let usage = v.get("usage").and_then(|u| {
        Some(Usage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });
    Ok(LlmReply {
        text: content.to_string(),
        usage,
        latency_ms: latency.as_millis() as u64,
    })
}

impl Gateway for HttpGateway {
    /// Retries transient failures with exponential backoff. The whole call is
    /// bounded by `timeout * (max_retries + 1)`.
    fn complete(&mut self, conversation: &Conversation) -> Result<LlmReply, LlmError> {
        if conversation.last_user().is_none() {
            return Err(LlmError::EmptyConversation);
        }
        let body = self.body(conversation);
        let per_attempt = self.config.timeout();
        let deadline = Instant::now() + per_attempt * (self.config.max_retries + 1);
        let mut attempt = 0;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(LlmError::Timeout);
            }
            match self.attempt(&body, per_attempt.min(remaining)) {
                Ok(r) => return Ok(r),
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    let wait = self.backoff * 2u32.saturating_pow(attempt);
                    let remaining = deadline.saturating_duration_since(Instant::now());
                    if wait >= remaining {
                        return Err(e);
                    }
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn serve(responses: Vec<(u16, &'static str)>) -> (String, std::thread::JoinHandle<usize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let handle = std::thread::spawn(move || {
            let mut served = 0;
            for (status, body) in responses {
                let (mut s, _) = listener.accept().unwrap();
                let mut buf = [0u8; 65536];
                let _ = s.read(&mut buf);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                s.write_all(reply.as_bytes()).unwrap();
                served += 1;
            }
            served
        });
        (url, handle)
    }

    fn config(endpoint: String) -> ModelConfig {
        ModelConfig {
            endpoint,
            timeout_secs: 2.0,
            max_retries: 2,
            api_key_env: "WITNESS_TEST_NO_KEY".into(),
            ..ModelConfig::default()
        }
    }

    fn conv() -> Conversation {
        let mut c = Conversation::new();
        c.push_user("hi");
        c
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"int main(){return 0;}"}}],"usage":{"prompt_tokens":3,"completion_tokens":5}}"#;

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, h) = serve(vec![(503, "{}"), (200, OK)]);
        let mut g = HttpGateway::new(config(url)).unwrap();
        g.backoff = Duration::from_millis(10);
        let r = g.complete(&conv()).unwrap();
        assert_eq!(r.text, "int main(){return 0;}");
        assert_eq!(
            r.usage,
            Some(Usage {
                prompt_tokens: 3,
                completion_tokens: 5
            })
        );
        assert_eq!(h.join().unwrap(), 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, h) = serve(vec![(401, "{\"error\":\"bad key\"}")]);
        let mut g = HttpGateway::new(config(url)).unwrap();
        match g.complete(&conv()) {
            Err(LlmError::Api { status: 401, body }) => assert!(body.contains("bad key")),
            other => panic!("{other:?}"),
        }
        assert_eq!(h.join().unwrap(), 1);
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let port = TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let mut g = HttpGateway::new(config(format!("http://127.0.0.1:{port}/v1"))).unwrap();
        g.backoff = Duration::from_millis(5);
        let started = Instant::now();
        assert!(matches!(g.complete(&conv()), Err(LlmError::Transport(_))));
        assert!(started.elapsed() < Duration::from_secs(6));
    }
}
