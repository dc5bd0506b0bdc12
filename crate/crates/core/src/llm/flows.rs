use std::sync::LazyLock;
use std::time::Duration;

use regex::Regex;
use serde::Serialize;

use super::prompts::{self, FIX_MARKER, STEP_OUTPUT_LIMIT};
use super::provider::{LlmError, Provider};
use crate::dsl::{catalog_prompt_text, parse_rule_with, serialize_rule, OperatorSchema, Rule, Violation};
use crate::engine::{Diagnostic, PipelineValue};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("response is neither **PASS** nor a **FAIL** block: {response:?}")]
    UnparseableVerdict { response: String },
    #[error("response has no `{FIX_MARKER}` marker")]
    MissingMarker { response: String },
    #[error("generated rule is invalid: {message}")]
    Generation {
        message: String,
        raw: String,
        violations: Vec<Violation>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictStatus {
    Pass,
    Fail,
}

/// Parsed answer of the evaluate flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub lines: Vec<usize>,
    pub issue: String,
    pub suggestion: String,
}

impl Verdict {
    pub fn pass() -> Self {
        Self {
            status: VerdictStatus::Pass,
            lines: Vec::new(),
            issue: String::new(),
            suggestion: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == VerdictStatus::Pass
    }
}

static LINE_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d+)(?:\s*(?:-|–|to)\s*(\d+))?").unwrap());
const MAX_RANGE: usize = 10_000;

/// Total over all strings: every response is a pass, a fail, or `None`.
pub fn parse_verdict(response: &str) -> Option<Verdict> {
    let trimmed = response.trim();
    if trimmed == "**PASS**" {
        return Some(Verdict::pass());
    }
    let mut lines = trimmed.lines().map(str::trim);
    if lines.next() != Some("**FAIL**") {
        return None;
    }
    let (mut refs, mut issue, mut suggestion) = (None, None, None);
    for line in lines {
        if let Some(v) = strip_label(line, &["Line(s):", "Lines:", "Line:"]) {
            refs.get_or_insert(v);
        } else if let Some(v) = strip_label(line, &["Issue:"]) {
            issue.get_or_insert(v);
        } else if let Some(v) = strip_label(line, &["Suggestion:"]) {
            suggestion.get_or_insert(v);
        }
    }
    let issue = issue.filter(|i| !i.is_empty())?.to_string();
    Some(Verdict {
        status: VerdictStatus::Fail,
        lines: parse_line_refs(refs.unwrap_or_default()),
        issue,
        suggestion: suggestion.unwrap_or_default().to_string(),
    })
}

fn strip_label<'a>(line: &'a str, labels: &[&str]) -> Option<&'a str> {
    labels.iter().find_map(|l| line.strip_prefix(l)).map(str::trim)
}

/// Line numbers in a `Line(s):` value; ranges are expanded, zeros dropped.
pub fn parse_line_refs(text: &str) -> Vec<usize> {
    let mut out = Vec::new();
    for caps in LINE_REF.captures_iter(text) {
        let Ok(a) = caps[1].parse::<usize>() else { continue };
        match caps.get(2).and_then(|b| b.as_str().parse::<usize>().ok()) {
            Some(b) if b >= a && b - a <= MAX_RANGE => out.extend(a..=b),
            Some(b) => out.extend([a, b]),
            None => out.push(a),
        }
    }
    out.retain(|&l| l >= 1);
    out.sort_unstable();
    out.dedup();
    out
}

/// Text after the marker line, byte for byte.
pub fn extract_fixed(response: &str) -> Option<&str> {
    let at = response.find(FIX_MARKER)?;
    let rest = &response[at + FIX_MARKER.len()..];
    Some(rest.strip_prefix("\r\n").or_else(|| rest.strip_prefix('\n')).unwrap_or(rest))
}

/// Removes one surrounding code fence pair, if present.
pub fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(after) = t.strip_prefix("```") else {
        return text;
    };
    let Some(nl) = after.find('\n') else {
        return text;
    };
    let body = &after[nl + 1..];
    body.trim_end().strip_suffix("```").unwrap_or(body)
}

pub fn diagnostic_text(diagnostics: &[Diagnostic]) -> String {
    if diagnostics.is_empty() {
        return "(none)".into();
    }
    diagnostics
        .iter()
        .map(|d| format!("- line {}: {}", d.span.start_line, d.message))
        .collect::<Vec<_>>()
        .join("\n")
}

/// YAML of each completed step, capped per step.
pub fn operator_outputs_text(rule: &Rule, outputs: &[PipelineValue]) -> String {
    if outputs.is_empty() {
        return "(none)".into();
    }
    outputs
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let op = rule.pipeline.get(i).map_or("?", |s| s.operator.as_str());
            format!("step {i} ({op}):\n{}", v.to_yaml_truncated(STEP_OUTPUT_LIMIT).trim_end())
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// A rule drafted from a one-line idea, already validated.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRule {
    pub yaml: String,
    pub rule: Rule,
    /// Non-fatal findings such as unknown top-level keys.
    pub warnings: Vec<Violation>,
}

pub fn generate_rule(
    provider: &Provider,
    idea: &str,
    catalog: &[OperatorSchema],
    model: Option<&str>,
) -> Result<GeneratedRule, FlowError> {
    let system = prompts::generate_system(&catalog_prompt_text(catalog));
    let user = prompts::generate_user(idea);
    let raw = provider.complete(&system, &user, model, None)?;
    let yaml = strip_fences(&raw).to_string();
    let parsed = parse_rule_with(&yaml, catalog);
    let warnings: Vec<Violation> = parsed.violations.iter().filter(|v| v.is_warning()).cloned().collect();
    match parsed.into_result() {
        Ok(rule) => Ok(GeneratedRule { yaml, rule, warnings }),
        Err(violations) => Err(FlowError::Generation {
            message: violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            raw,
            violations,
        }),
    }
}

/// Inputs of one evaluate call.
pub struct Evaluation<'a> {
    pub rule: &'a Rule,
    pub rule_definition: &'a str,
    pub step_outputs: &'a [PipelineValue],
    pub prior_diagnostics: &'a [Diagnostic],
    pub markdown: &'a str,
    pub model: Option<&'a str>,
    pub timeout: Option<Duration>,
}

pub fn evaluate_document(provider: &Provider, e: &Evaluation) -> Result<Verdict, FlowError> {
    let system = prompts::evaluate_system(
        &serialize_rule(e.rule),
        &operator_outputs_text(e.rule, e.step_outputs),
        &diagnostic_text(e.prior_diagnostics),
        e.markdown,
    );
    let response = provider.complete(&system, e.rule_definition, e.model, e.timeout)?;
    parse_verdict(&response).ok_or(FlowError::UnparseableVerdict { response })
}

/// Asks for a corrected document. Nothing is returned unless the response
/// carries the marker.
pub fn fix_document(
    provider: &Provider,
    rule: &Rule,
    diagnostics: &[Diagnostic],
    markdown: &str,
    prompt: &str,
    model: Option<&str>,
) -> Result<String, FlowError> {
    let system = prompts::fix_system(&serialize_rule(rule), prompt, &diagnostic_text(diagnostics), markdown);
    let response = provider.complete(&system, prompt, model, None)?;
    match extract_fixed(&response) {
        Some(fixed) => Ok(fixed.to_string()),
        None => Err(FlowError::MissingMarker { response }),
    }
}
