//! Rule selection, environment setup and linting, shared by the command
//! line and the HTTP API so both produce the same report.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::corpus::{RuleCorpus, SelectionError};
use crate::dsl::{parse_rules, Rule};
use crate::engine::{run_rules, Environment, Policy, Report};
use crate::llm::{LlmConfig, Mode, Provider, StubTable};
use crate::net::{OfflineTransport, Transport, UreqTransport};

/// Used when neither a preset nor rules are named.
pub const DEFAULT_PRESET: &str = "software-library";

/// A rule named in a selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleRef {
    /// Looked up in the corpus.
    Name(String),
    /// Rule YAML (possibly several documents) from `origin`.
    Yaml { origin: String, text: String },
}

impl RuleRef {
    /// Command-line form: a path to an existing `.yaml`/`.yml` file, or a
    /// rule name.
    pub fn from_arg(arg: &str) -> std::io::Result<RuleRef> {
        let path = Path::new(arg);
        let is_yaml = matches!(path.extension().and_then(|e| e.to_str()), Some("yaml" | "yml"));
        if is_yaml && path.exists() {
            Ok(RuleRef::Yaml {
                origin: arg.to_string(),
                text: std::fs::read_to_string(path)?,
            })
        } else {
            Ok(RuleRef::Name(arg.to_string()))
        }
    }

    /// API form: anything spanning several lines is inline YAML.
    pub fn from_api(entry: &str) -> RuleRef {
        if entry.contains('\n') {
            RuleRef::Yaml {
                origin: "inline".into(),
                text: entry.to_string(),
            }
        } else {
            RuleRef::Name(entry.to_string())
        }
    }
}

/// Rules to run plus configuration errors for entries that did not resolve.
/// Later duplicates of a rule name are dropped.
pub fn select(
    corpus: &RuleCorpus,
    preset: Option<&str>,
    rules: &[RuleRef],
) -> Result<(Vec<Rule>, Vec<String>), SelectionError> {
    let (mut selected, mut errors) = match (preset, rules.is_empty()) {
        (Some(p), _) => corpus.select_preset(p)?,
        (None, true) => corpus.select_preset(DEFAULT_PRESET)?,
        (None, false) => (Vec::new(), Vec::new()),
    };
    for r in rules {
        match r {
            RuleRef::Name(name) => {
                let (found, errs) = corpus.select_rules(std::slice::from_ref(name));
                selected.extend(found);
                errors.extend(errs);
            }
            RuleRef::Yaml { origin, text } => {
                for parsed in parse_rules(text) {
                    match parsed.into_result() {
                        Ok(rule) => selected.push(rule),
                        Err(violations) => {
                            errors.extend(violations.iter().map(|v| format!("{origin}: {v}")));
                        }
                    }
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    selected.retain(|r| seen.insert(r.key()));
    Ok((selected, errors))
}

/// Lints one document.
pub fn lint(
    markdown: &str,
    document_path: &str,
    rules: &[Rule],
    config_errors: Vec<String>,
    corpus: &RuleCorpus,
    env: &Environment,
) -> Report {
    let results = run_rules(rules, markdown, env);
    Report::new(document_path, &corpus.version, results, config_errors)
}

/// How to reach (or imitate) the model.
#[derive(Debug, Clone, Default)]
pub struct LlmOptions {
    /// Overrides the mode from the config file.
    pub mode: Option<Mode>,
    pub config: Option<PathBuf>,
    pub stub_file: Option<PathBuf>,
    pub replay_dir: Option<PathBuf>,
    /// Live mode only: write every exchange here for later replay.
    pub record_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] crate::llm::ConfigError),
    #[error("cannot read stub file {path}: {message}")]
    Stub { path: String, message: String },
    #[error("replay mode needs a recording directory (--replay-dir)")]
    NoReplayDir,
    #[error("{0}")]
    Io(String),
}

pub fn build_provider(opts: &LlmOptions, transport: Arc<dyn Transport>) -> Result<Provider, SetupError> {
    let config = match &opts.config {
        Some(path) => LlmConfig::load(path)?,
        None => LlmConfig::default(),
    };
    let provider = match opts.mode.unwrap_or(config.provider.mode) {
        Mode::Stub => {
            let table = match &opts.stub_file {
                Some(path) => {
                    let stub_err = |message: String| SetupError::Stub {
                        path: path.display().to_string(),
                        message,
                    };
                    let text = std::fs::read_to_string(path).map_err(|e| stub_err(e.to_string()))?;
                    StubTable::parse(&text).map_err(|e| stub_err(e.to_string()))?
                }
                None => StubTable::default(),
            };
            Provider::stub(table)
        }
        Mode::Replay => Provider::replay(opts.replay_dir.clone().ok_or(SetupError::NoReplayDir)?),
        Mode::Live => Provider::live(config.clone(), transport, opts.record_dir.clone()),
    };
    Ok(provider.with_config(config))
}

/// The environment for a run. Without `allow_net` no network layer exists
/// at all.
pub fn build_environment(policy: Policy, llm: &LlmOptions, github_api: Option<&str>) -> Result<Environment, SetupError> {
    let transport: Arc<dyn Transport> = if policy.allow_net {
        Arc::new(UreqTransport)
    } else {
        Arc::new(OfflineTransport)
    };
    let provider = build_provider(llm, transport.clone())?;
    let mut env = Environment::new(provider, transport).with_policy(policy);
    if let Some(base) = github_api {
        env.github_api_base = base.to_string();
    }
    Ok(env)
}

/// Loads `--rules-dir`, or the built-in corpus. Files that fail to load
/// become configuration errors.
pub fn load_corpus(dir: Option<&Path>) -> Result<(RuleCorpus, Vec<String>), SetupError> {
    match dir {
        None => Ok((
            RuleCorpus::builtin().clone(),
            RuleCorpus::builtin_errors().iter().map(|e| e.to_string()).collect(),
        )),
        Some(d) => {
            let (corpus, errors) = crate::corpus::load_corpus(d)
                .map_err(|e| SetupError::Io(format!("cannot read rules directory {}: {e}", d.display())))?;
            Ok((corpus, errors.iter().map(|e| e.to_string()).collect()))
        }
    }
}
