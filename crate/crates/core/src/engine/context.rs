use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::value::{Diagnostic, PipelineValue};
use crate::dsl::Rule;
use crate::llm::Provider;
use crate::md::{Document, SourceSpan};
use crate::net::{OfflineTransport, Transport};

/// What a run is allowed to touch. Everything is off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Policy {
    pub allow_net: bool,
    pub allow_exec: bool,
    pub allow_scripts: bool,
}

/// Everything outside the document that a rule run depends on.
#[derive(Clone)]
pub struct Environment {
    pub policy: Policy,
    pub provider: Arc<Provider>,
    pub transport: Arc<dyn Transport>,
    /// Working directory for `execute`; a fresh temp dir when unset.
    pub working_dir: Option<PathBuf>,
    pub rule_budget: Duration,
    /// Rules evaluated concurrently.
    pub parallelism: usize,
    pub github_api_base: String,
    /// Rules skipped regardless of content.
    pub ignored_rules: BTreeSet<String>,
}

impl Environment {
    pub const DEFAULT_BUDGET: Duration = Duration::from_secs(30);
    pub const DEFAULT_PARALLELISM: usize = 4;
    pub const DEFAULT_GITHUB_API: &'static str = "https://api.github.com";

    pub fn new(provider: Provider, transport: Arc<dyn Transport>) -> Self {
        Self {
            policy: Policy::default(),
            provider: Arc::new(provider),
            transport,
            working_dir: None,
            rule_budget: Self::DEFAULT_BUDGET,
            parallelism: Self::DEFAULT_PARALLELISM,
            github_api_base: Self::DEFAULT_GITHUB_API.into(),
            ignored_rules: BTreeSet::new(),
        }
    }

    /// No network layer and a stub provider with no canned responses.
    pub fn hermetic() -> Self {
        Self::new(Provider::stub(Default::default()), Arc::new(OfflineTransport))
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_provider(mut self, provider: Provider) -> Self {
        self.provider = Arc::new(provider);
        self
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn ignoring(mut self, rule: &str) -> Self {
        self.ignored_rules.insert(crate::naming::canonical_rule_name(rule));
        self
    }
}

/// Raw material for a diagnostic before it is localized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Finding {
    pub message: String,
    pub span: Option<SourceSpan>,
    /// Offending text, used to locate the finding when no span is known.
    pub text: Option<String>,
    pub fix_hint: Option<String>,
}

impl Finding {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            ..Self::default()
        }
    }

    pub fn at(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }

    pub fn text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn hint(mut self, hint: impl Into<String>) -> Self {
        self.fix_hint = Some(hint.into());
        self
    }
}

/// Resolves where a finding should be reported: its own span when valid for
/// `doc`, else the first line containing its text, else line 1.
pub fn localize(finding: &Finding, doc: &Document) -> SourceSpan {
    let lines = doc.line_count();
    if let Some(span) = finding.span {
        if span.start_line >= 1 && span.start_line <= lines {
            let mut span = span;
            if span.end_line > lines || span.end() < span.start() {
                span.end_line = span.start_line;
                span.end_column = span.start_column;
            }
            return span;
        }
    }
    if let Some(text) = finding.text.as_deref() {
        if let Some(pos) = (!text.is_empty()).then(|| doc.text().find(text)).flatten() {
            return doc.span(pos..pos + text.len());
        }
        if let Some(first) = text.lines().map(str::trim).find(|l| !l.is_empty()) {
            if let Some(line) = doc.first_line_containing(first) {
                return SourceSpan::line(line);
            }
        }
    }
    SourceSpan::first_line()
}

/// State private to one rule execution.
pub struct ExecutionContext<'a> {
    pub doc: &'a Document,
    pub rule: &'a Rule,
    pub env: &'a Environment,
    pub step_outputs: Vec<PipelineValue>,
    pub diagnostics: Vec<Diagnostic>,
    pub notes: Vec<String>,
    pub deadline: Instant,
    /// Prompt recorded by `fixUsingLLM`, used when a fix is requested.
    pub fix_prompt: Option<String>,
    pub fix_model: Option<String>,
    pub step: usize,
}

impl<'a> ExecutionContext<'a> {
    pub fn new(doc: &'a Document, rule: &'a Rule, env: &'a Environment) -> Self {
        Self {
            doc,
            rule,
            env,
            step_outputs: Vec::new(),
            diagnostics: Vec::new(),
            notes: Vec::new(),
            deadline: Instant::now() + env.rule_budget,
            fix_prompt: None,
            fix_model: None,
            step: 0,
        }
    }

    pub fn markdown(&self) -> &str {
        self.doc.text()
    }

    pub fn diagnostic(&self, finding: Finding) -> Diagnostic {
        Diagnostic {
            rule_name: self.rule.key(),
            severity: self.rule.severity(),
            span: localize(&finding, self.doc),
            message: finding.message,
            fix_hint: finding.fix_hint,
            step: self.step,
        }
    }

    pub fn remaining(&self) -> Duration {
        self.deadline.saturating_duration_since(Instant::now())
    }

    /// Caps an operator timeout by what is left of the rule budget.
    pub fn clamp(&self, timeout: Duration) -> Duration {
        timeout.min(self.remaining())
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}
