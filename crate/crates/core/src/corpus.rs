//! The shipped rule corpus and preset bundles.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use include_dir::{include_dir, Dir};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dsl::{parse_preset, parse_rules, Preset, Rule, Severity, Violation};
use crate::naming::canonical_rule_name;

static EMBEDDED: Dir<'_> = include_dir!("$CARGO_MANIFEST_DIR/corpus");

static BUILTIN: LazyLock<(RuleCorpus, Vec<CorpusError>)> = LazyLock::new(|| {
    let mut files: Vec<(String, String)> = Vec::new();
    for sub in ["rules", "presets"] {
        if let Some(dir) = EMBEDDED.get_dir(sub) {
            for f in dir.files() {
                if let Some(text) = f.contents_utf8() {
                    files.push((f.path().display().to_string(), text.to_string()));
                }
            }
        }
    }
    RuleCorpus::from_files(files)
});

/// A problem with one corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusError {
    pub path: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

impl std::fmt::Display for CorpusError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleSummary {
    pub name: String,
    pub description: String,
    pub severity: Severity,
}

#[derive(Debug, Clone, Default)]
pub struct RuleCorpus {
    /// Keyed by canonical rule name.
    pub rules: BTreeMap<String, Rule>,
    pub presets: BTreeMap<String, Preset>,
    /// Package version plus a hash of the corpus files.
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectionError {
    #[error("unknown preset `{name}` (available: {})", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },
}

impl RuleCorpus {
    /// The corpus compiled into the binary. Load errors there are bugs and
    /// are caught by tests; the valid part is returned regardless.
    pub fn builtin() -> &'static RuleCorpus {
        &BUILTIN.0
    }

    pub fn builtin_errors() -> &'static [CorpusError] {
        &BUILTIN.1
    }

    /// Builds a corpus from `(path, text)` pairs. Files under a `presets`
    /// directory are presets; everything else holds rules.
    pub fn from_files(mut files: Vec<(String, String)>) -> (RuleCorpus, Vec<CorpusError>) {
        files.sort();
        let mut hasher = Sha256::new();
        let mut corpus = RuleCorpus::default();
        let mut errors = Vec::new();
        let mut preset_files = Vec::new();
        for (path, text) in &files {
            hasher.update(path.as_bytes());
            hasher.update([0u8]);
            hasher.update(text.as_bytes());
            hasher.update([0u8]);
            let is_preset = Path::new(path)
                .components()
                .any(|c| c.as_os_str() == "presets");
            if is_preset {
                preset_files.push((path, text));
                continue;
            }
            for parse in parse_rules(text) {
                let errs: Vec<Violation> = parse.errors().cloned().collect();
                match parse.rule {
                    Some(rule) if errs.is_empty() => {
                        match corpus.rules.entry(rule.key()) {
                            Entry::Occupied(e) => errors.push(CorpusError {
                                path: path.clone(),
                                message: format!("duplicate rule name `{}`", e.key()),
                                violations: vec![],
                            }),
                            Entry::Vacant(e) => {
                                e.insert(rule);
                            }
                        }
                    }
                    _ => errors.push(CorpusError {
                        path: path.clone(),
                        message: errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
                        violations: errs,
                    }),
                }
            }
        }
        for (path, text) in preset_files {
            match parse_preset(text) {
                Ok(preset) => {
                    for name in &preset.rules {
                        if !corpus.rules.contains_key(&canonical_rule_name(name)) {
                            errors.push(CorpusError {
                                path: path.clone(),
                                message: format!("preset `{}` names unknown rule `{name}`", preset.name),
                                violations: vec![],
                            });
                        }
                    }
                    let key = canonical_rule_name(&preset.name);
                    if corpus.presets.insert(key.clone(), preset).is_some() {
                        errors.push(CorpusError {
                            path: path.clone(),
                            message: format!("duplicate preset name `{key}`"),
                            violations: vec![],
                        });
                    }
                }
                Err(violations) => errors.push(CorpusError {
                    path: path.clone(),
                    message: violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
                    violations,
                }),
            }
        }
        corpus.version = format!("{}+{}", env!("CARGO_PKG_VERSION"), &hex::encode(hasher.finalize())[..12]);
        (corpus, errors)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.get(&canonical_rule_name(name))
    }

    pub fn preset(&self, name: &str) -> Option<&Preset> {
        self.presets.get(&canonical_rule_name(name))
    }

    /// Name and description of each rule, sorted by name. The filter is a
    /// case-insensitive substring of the name.
    pub fn list_rules(&self, filter: Option<&str>) -> Vec<RuleSummary> {
        let needle = filter.map(str::to_lowercase);
        self.rules
            .iter()
            .filter(|(key, _)| needle.as_deref().is_none_or(|n| key.contains(n)))
            .map(|(key, rule)| RuleSummary {
                name: key.clone(),
                description: rule.description.clone(),
                severity: rule.severity(),
            })
            .collect()
    }

    /// Rules named by a preset, plus an error for each name that does not
    /// resolve.
    pub fn select_preset(&self, name: &str) -> Result<(Vec<Rule>, Vec<String>), SelectionError> {
        let preset = self.preset(name).ok_or_else(|| SelectionError::UnknownPreset {
            name: name.into(),
            available: self.presets.keys().cloned().collect(),
        })?;
        Ok(self.select_rules(&preset.rules))
    }

    pub fn select_rules<S: AsRef<str>>(&self, names: &[S]) -> (Vec<Rule>, Vec<String>) {
        let mut rules = Vec::new();
        let mut errors = Vec::new();
        for name in names {
            match self.rule(name.as_ref()) {
                Some(r) => rules.push(r.clone()),
                None => errors.push(format!("unknown rule `{}`", name.as_ref())),
            }
        }
        (rules, errors)
    }
}

/// Reads `rules/*.yaml` and `presets/*.yaml` under `dir`.
pub fn load_corpus(dir: &Path) -> std::io::Result<(RuleCorpus, Vec<CorpusError>)> {
    let mut files = Vec::new();
    for sub in ["rules", "presets"] {
        let path = dir.join(sub);
        if !path.is_dir() {
            continue;
        }
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")))
            .collect();
        entries.sort();
        for p in entries {
            let text = std::fs::read_to_string(&p)?;
            let rel = p.strip_prefix(dir).unwrap_or(&p).display().to_string();
            files.push((rel, text));
        }
    }
    if files.is_empty() && !dir.is_dir() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} is not a directory", dir.display()),
        ));
    }
    Ok(RuleCorpus::from_files(files))
}
