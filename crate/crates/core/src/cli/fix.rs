//! Per-diagnostic fixes. The document itself is never rewritten; each
//! proposal becomes a unified diff.

use std::path::{Path, PathBuf};

use similar::TextDiff;

use crate::dsl::Rule;
use crate::engine::{Diagnostic, Environment, Report};
use crate::llm::{fix_document, FlowError, LlmError};

/// The prompt and model of the rule's `fixUsingLLM` step, if it has one.
pub fn fix_step(rule: &Rule) -> Option<(String, Option<String>)> {
    let step = rule.pipeline.iter().find(|s| s.operator == "fixUsingLLM")?;
    let prompt = step.param("prompt")?.as_str()?.to_string();
    let model = step.param("model").and_then(|m| m.as_str()).map(String::from);
    Some((prompt, model))
}

#[derive(Debug, thiserror::Error)]
pub enum FixError {
    #[error("rule `{0}` has no fixUsingLLM step")]
    NotFixable(String),
    #[error("fixing needs network access to the live model (enable with --allow-net)")]
    NetDisabled,
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Asks the model to fix one diagnostic.
pub fn propose_fix(rule: &Rule, diagnostic: &Diagnostic, markdown: &str, env: &Environment) -> Result<String, FixError> {
    let (prompt, model) = fix_step(rule).ok_or_else(|| FixError::NotFixable(rule.key()))?;
    if env.provider.is_live() && !env.policy.allow_net {
        return Err(FixError::NetDisabled);
    }
    let fixed = fix_document(
        &env.provider,
        rule,
        std::slice::from_ref(diagnostic),
        markdown,
        &prompt,
        model.as_deref(),
    )?;
    Ok(fixed)
}

/// Unified diff from `original` to `fixed`, labelled with `path`.
pub fn unified_patch(path: &str, original: &str, fixed: &str) -> String {
    TextDiff::from_lines(original, fixed)
        .unified_diff()
        .context_radius(3)
        .header(&format!("a/{path}"), &format!("b/{path}"))
        .to_string()
}

/// Sidecar file name: `{file}.{rule}.{n}.patch`, `n` counting from 1.
pub fn patch_path(file: &Path, rule: &str, n: usize) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{rule}.{n}.patch"));
    file.with_file_name(name)
}

#[derive(Debug)]
pub enum FixOutcome {
    Written(PathBuf),
    Unchanged { rule: String, n: usize },
    Failed { rule: String, n: usize, message: String },
}

/// One patch per diagnostic of every failing fixable rule.
pub fn write_patches(file: &Path, markdown: &str, report: &Report, rules: &[Rule], env: &Environment) -> Vec<FixOutcome> {
    let mut out = Vec::new();
    for result in report.rule_results.iter().filter(|r| r.fixable && !r.diagnostics.is_empty()) {
        let Some(rule) = rules.iter().find(|r| r.key() == result.rule_name) else {
            continue;
        };
        for (i, diagnostic) in result.diagnostics.iter().enumerate() {
            let n = i + 1;
            let rule_name = result.rule_name.clone();
            match propose_fix(rule, diagnostic, markdown, env) {
                Ok(fixed) if fixed == markdown => out.push(FixOutcome::Unchanged { rule: rule_name, n }),
                Ok(fixed) => {
                    let path = patch_path(file, &rule_name, n);
                    let patch = unified_patch(&file.display().to_string(), markdown, &fixed);
                    match std::fs::write(&path, patch) {
                        Ok(()) => out.push(FixOutcome::Written(path)),
                        Err(e) => out.push(FixOutcome::Failed {
                            rule: rule_name,
                            n,
                            message: format!("cannot write {}: {e}", path.display()),
                        }),
                    }
                }
                Err(e) => {
                    let stop = is_unavailable(&e);
                    out.push(FixOutcome::Failed {
                        rule: rule_name,
                        n,
                        message: e.to_string(),
                    });
                    if stop {
                        return out;
                    }
                }
            }
        }
    }
    out
}

/// Whether a fix failure means no model is reachable at all, in which case
/// trying the remaining diagnostics is pointless.
fn is_unavailable(e: &FixError) -> bool {
    matches!(
        e,
        FixError::NetDisabled | FixError::Flow(FlowError::Llm(LlmError::Auth(_) | LlmError::Disabled(_)))
    )
}
