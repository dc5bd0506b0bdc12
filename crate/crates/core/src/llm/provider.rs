use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{LlmConfig, Mode};
use crate::net::{HttpRequest, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider unreachable: {0}")]
    Network(String),
    #[error("provider returned HTTP {status}{}: {body}", if *.retriable { " (retriable)" } else { "" })]
    Http { status: u16, retriable: bool, body: String },
    #[error("no recorded exchange for prompt hash {hash}")]
    ReplayMiss { hash: String },
    #[error("no stub response matches the prompt")]
    StubMiss,
    #[error("malformed provider response: {0}")]
    Format(String),
    #[error("{0}")]
    Disabled(String),
}

impl LlmError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, LlmError::Http { retriable: true, .. } | LlmError::Network(_))
    }
}

/// One canned response, chosen when `contains` occurs in the prompt.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubResponse {
    pub contains: String,
    pub response: String,
}

/// Canned responses for tests. The first entry whose `contains` appears in
/// the system or user prompt wins; `default` answers everything else.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubTable {
    #[serde(default)]
    pub default: Option<String>,
    #[serde(default)]
    pub responses: Vec<StubResponse>,
}

impl StubTable {
    pub fn parse(yaml: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(yaml)
    }

    pub fn with_default(response: &str) -> Self {
        Self {
            default: Some(response.into()),
            responses: Vec::new(),
        }
    }

    pub fn when(mut self, contains: &str, response: &str) -> Self {
        self.responses.push(StubResponse {
            contains: contains.into(),
            response: response.into(),
        });
        self
    }

    fn answer(&self, system: &str, user: &str) -> Option<&str> {
        let prompt = format!("{system}\n{user}");
        self.responses
            .iter()
            .find(|r| prompt.contains(&r.contains))
            .map(|r| r.response.as_str())
            .or(self.default.as_deref())
    }
}

/// A recorded request and its response, stored verbatim for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptExchange {
    pub system_prompt: String,
    pub user_prompt: String,
    pub response_text: String,
    pub model_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Replay key for a prompt pair.
pub fn prompt_hash(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0u8]);
    h.update(user.as_bytes());
    hex::encode(h.finalize())
}

enum Backend {
    Stub(StubTable),
    Replay(PathBuf),
    Live {
        transport: Arc<dyn Transport>,
        record: Option<PathBuf>,
    },
}

pub struct Provider {
    config: LlmConfig,
    backend: Backend,
}

impl Provider {
    /// Stub provider with the bundled configuration.
    pub fn stub(table: StubTable) -> Self {
        let mut config = LlmConfig::default();
        config.provider.mode = Mode::Stub;
        Self {
            config,
            backend: Backend::Stub(table),
        }
    }

    pub fn replay(dir: impl Into<PathBuf>) -> Self {
        let mut config = LlmConfig::default();
        config.provider.mode = Mode::Replay;
        Self {
            config,
            backend: Backend::Replay(dir.into()),
        }
    }

    /// Talks to the configured endpoint. When `record` is set, each exchange
    /// is also written there in replay format.
    pub fn live(config: LlmConfig, transport: Arc<dyn Transport>, record: Option<PathBuf>) -> Self {
        let mut config = config;
        config.provider.mode = Mode::Live;
        Self {
            config,
            backend: Backend::Live { transport, record },
        }
    }

    pub fn with_config(mut self, config: LlmConfig) -> Self {
        let mode = self.config.provider.mode;
        self.config = config;
        self.config.provider.mode = mode;
        self
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.provider.mode
    }

    pub fn is_live(&self) -> bool {
        matches!(self.backend, Backend::Live { .. })
    }

    pub fn default_timeout(&self) -> Duration {
        Duration::from_millis(self.config.provider.timeout_ms)
    }

    /// Sends one system/user prompt pair. `model` overrides the configured
    /// model for this call.
    pub fn complete(
        &self,
        system: &str,
        user: &str,
        model: Option<&str>,
        timeout: Option<Duration>,
    ) -> Result<String, LlmError> {
        let model = model.unwrap_or(&self.config.provider.model);
        match &self.backend {
            Backend::Stub(table) => table.answer(system, user).map(str::to_string).ok_or(LlmError::StubMiss),
            Backend::Replay(dir) => {
                let hash = prompt_hash(system, user);
                let path = dir.join(format!("{hash}.json"));
                let text = std::fs::read_to_string(&path).map_err(|_| LlmError::ReplayMiss { hash: hash.clone() })?;
                let exchange: PromptExchange = serde_json::from_str(&text)
                    .map_err(|e| LlmError::Format(format!("{}: {e}", path.display())))?;
                Ok(exchange.response_text)
            }
            Backend::Live { transport, record } => {
                let text = self.send_live(transport.as_ref(), system, user, model, timeout)?;
                if let Some(dir) = record {
                    // Recording is best effort; a failed write must not lose the answer.
                    let _ = write_exchange(dir, system, user, &text, model);
                }
                Ok(text)
            }
        }
    }

    fn send_live(
        &self,
        transport: &dyn Transport,
        system: &str,
        user: &str,
        model: &str,
        timeout: Option<Duration>,
    ) -> Result<String, LlmError> {
        let var = &self.config.provider.api_key_env;
        let key = std::env::var(var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::Auth(format!("environment variable {var} is not set")))?;
        let mut body = json!({
            "model": model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        if self.config.supports_temperature(model) {
            body["temperature"] = json!(self.config.provider.temperature);
        }
        let request = HttpRequest::post_json(
            self.config.provider.endpoint_url.as_str(),
            &body,
            timeout.unwrap_or_else(|| self.default_timeout()),
        )
        .header("Authorization", format!("Bearer {key}"));
        let response = transport.send(&request).map_err(|e| match e {
            TransportError::Timeout => LlmError::Network("request timed out".into()),
            other => LlmError::Network(other.to_string()),
        })?;
        match response.status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Auth(format!("HTTP {}", response.status))),
            status => {
                return Err(LlmError::Http {
                    status,
                    retriable: status == 429 || status >= 500,
                    body: response.text().chars().take(200).collect(),
                })
            }
        }
        let payload: Value =
            serde_json::from_str(&response.text()).map_err(|e| LlmError::Format(format!("not JSON: {e}")))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::Format("missing choices[0].message.content".into()))
    }
}

pub fn write_exchange(dir: &Path, system: &str, user: &str, response: &str, model: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let exchange = PromptExchange {
        system_prompt: system.into(),
        user_prompt: user.into(),
        response_text: response.into(),
        model_id: model.into(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let path = dir.join(format!("{}.json", prompt_hash(system, user)));
    std::fs::write(&path, serde_json::to_string_pretty(&exchange).expect("exchange serializes"))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{CountingTransport, OfflineTransport};

    #[test]
    fn stub_first_match_then_default() {
        let p = Provider::stub(StubTable::with_default("**PASS**").when("emoji", "**FAIL**\nLine(s): 1\nIssue: x"));
        assert!(p.complete("sys", "too many emoji", None, None).unwrap().starts_with("**FAIL**"));
        assert_eq!(p.complete("sys", "other", None, None).unwrap(), "**PASS**");
        assert_eq!(Provider::stub(StubTable::default()).complete("a", "b", None, None), Err(LlmError::StubMiss));
    }

    #[test]
    fn replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_exchange(dir.path(), "sys", "user", "recorded\n", "m").unwrap();
        let p = Provider::replay(dir.path());
        assert_eq!(p.complete("sys", "user", None, None).unwrap(), "recorded\n");
        let miss = p.complete("sys", "other", None, None).unwrap_err();
        assert_eq!(miss, LlmError::ReplayMiss { hash: prompt_hash("sys", "other") });
    }

    #[test]
    fn hash_separates_fields() {
        assert_ne!(prompt_hash("ab", "c"), prompt_hash("a", "bc"));
    }

    #[test]
    fn live_without_key_fails_before_any_request() {
        let counting = Arc::new(CountingTransport::new(Arc::new(OfflineTransport)));
        let mut config = LlmConfig::default();
        config.provider.api_key_env = "PIPELINT_TEST_KEY_THAT_IS_NEVER_SET".into();
        let p = Provider::live(config, counting.clone(), None);
        assert!(matches!(p.complete("s", "u", None, None), Err(LlmError::Auth(_))));
        assert_eq!(counting.count(), 0);
    }
}
