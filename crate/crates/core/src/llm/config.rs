use std::path::Path;

use serde::{Deserialize, Serialize};

const DEFAULT_CONFIG: &str = include_str!("../../config/default.toml");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    #[default]
    Stub,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub mode: Mode,
    pub endpoint_url: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    pub timeout_ms: u64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelInfo {
    pub id: String,
    #[serde(default = "yes")]
    pub supports_temperature: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub provider: ProviderConfig,
    #[serde(default)]
    pub models: Vec<ModelInfo>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config must not contain an API key; set `api_key_env` to the name of an environment variable")]
    InlineKey,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("bundled config is valid")
    }
}

impl LlmConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        // A stray key would be silently ignored by serde defaults elsewhere,
        // so refuse it outright.
        let raw: toml::Table = text.parse()?;
        if let Some(provider) = raw.get("provider").and_then(|p| p.as_table()) {
            if provider.keys().any(|k| k == "api_key" || k == "apiKey") {
                return Err(ConfigError::InlineKey);
            }
        }
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Unlisted models are assumed to accept a temperature.
    pub fn supports_temperature(&self, model: &str) -> bool {
        self.models
            .iter()
            .find(|m| m.id == model)
            .is_none_or(|m| m.supports_temperature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults() {
        let c = LlmConfig::default();
        assert_eq!(c.provider.mode, Mode::Stub);
        assert_eq!(c.provider.temperature, 0.0);
        assert!(c.models.iter().any(|m| m.id == "openai/gpt-oss-120b"));
    }

    #[test]
    fn inline_keys_are_refused() {
        let text = DEFAULT_CONFIG.replace("[provider]", "[provider]\napi_key = \"sk-123\"");
        assert!(matches!(LlmConfig::parse(&text), Err(ConfigError::InlineKey)));
    }
}
