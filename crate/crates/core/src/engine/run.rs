use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::context::{Environment, ExecutionContext, Finding};
use super::value::{can_coerce, coerce, Diagnostic, PipelineValue, ValueKind};
use crate::dsl::{validate_rule, Rule, Severity};
use crate::md::{Document, IgnoreMap};
use crate::ops::{Catalog, OpError};

/// Previews of non-judgment results are cut to this many bytes.
pub const PREVIEW_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// The pipeline ran but its last value is not a judgment.
    Incomplete,
    /// The pipeline cannot be evaluated as written.
    Halted,
    Errored,
    Skipped,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Incomplete => "incomplete",
            Outcome::Halted => "halted",
            Outcome::Errored => "errored",
            Outcome::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleResult {
    pub rule_name: String,
    pub severity: Severity,
    pub outcome: Outcome,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preview: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// The rule declares a `fixUsingLLM` step.
    pub fixable: bool,
    /// Wall-clock time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RuleResult {
    fn new(rule: &Rule, outcome: Outcome) -> Self {
        Self {
            rule_name: rule.key(),
            severity: rule.severity(),
            outcome,
            diagnostics: Vec::new(),
            preview: None,
            reason: None,
            notes: Vec::new(),
            fixable: is_fixable(rule),
            elapsed: Duration::ZERO,
        }
    }

    fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }
}

pub fn is_fixable(rule: &Rule) -> bool {
    rule.pipeline.iter().any(|s| s.operator == "fixUsingLLM")
}

/// Why a pipeline cannot run.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {step} ({operator}): {message}")]
pub struct HaltReason {
    pub step: usize,
    pub operator: String,
    pub message: String,
}

/// Checks every step's input against its predecessor's declared output.
/// Returns the output kind of each step, `None` where only known at run time.
pub fn type_check(rule: &Rule, catalog: &Catalog) -> Result<Vec<Option<ValueKind>>, HaltReason> {
    let mut kinds = Vec::with_capacity(rule.pipeline.len());
    let mut prev: Option<Option<ValueKind>> = None;
    for (i, step) in rule.pipeline.iter().enumerate() {
        let halt = |message: String| HaltReason {
            step: i,
            operator: step.operator.clone(),
            message,
        };
        let op = catalog
            .get(&step.operator)
            .ok_or_else(|| halt(format!("unknown operator `{}`", step.operator)))?;
        let decl = op.input(&step.params);
        match prev {
            None if decl.needs_predecessor => {
                return Err(halt(format!(
                    "`{}` needs a preceding step producing {}, but nothing precedes it",
                    step.operator,
                    kinds_list(decl.accepts)
                )))
            }
            Some(Some(k)) if decl.needs_predecessor || !decl.accepts(k) => {
                let ok = decl.accepts(k) || (decl.coercible && decl.accepts.iter().any(|&t| can_coerce(k, t)));
                if !ok {
                    return Err(halt(format!(
                        "`{}` expects {}, but the previous step produces {k}",
                        step.operator,
                        kinds_list(decl.accepts)
                    )));
                }
            }
            _ => {}
        }
        let out = op.output(&step.params, prev.flatten());
        kinds.push(out);
        prev = Some(out);
    }
    Ok(kinds)
}

fn kinds_list(kinds: &[ValueKind]) -> String {
    if kinds.len() == ValueKind::ALL.len() {
        return "any value".into();
    }
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(" or ")
}

pub fn run_rule(rule: &Rule, markdown: &str, env: &Environment) -> RuleResult {
    run_rule_with(rule, &Document::new(markdown), env, Catalog::builtin())
}

/// Runs one rule. Every failure mode is reported in the result.
pub fn run_rule_with(rule: &Rule, doc: &Document, env: &Environment, catalog: &Catalog) -> RuleResult {
    trace_rule(rule, doc, env, catalog).0
}

/// Like [`run_rule_with`], also returning the output of every step that
/// completed.
pub fn trace_rule(rule: &Rule, doc: &Document, env: &Environment, catalog: &Catalog) -> (RuleResult, Vec<PipelineValue>) {
    let started = Instant::now();
    let (mut result, outputs) = match catch_unwind(AssertUnwindSafe(|| execute(rule, doc, env, catalog))) {
        Ok(r) => r,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            let r = RuleResult::new(rule, Outcome::Errored).with_reason(format!("internal error: {msg}"));
            (r, Vec::new())
        }
    };
    result.elapsed = started.elapsed();
    (result, outputs)
}

fn execute(rule: &Rule, doc: &Document, env: &Environment, catalog: &Catalog) -> (RuleResult, Vec<PipelineValue>) {
    let schema_errors: Vec<String> = validate_rule(rule, catalog.schemas())
        .into_iter()
        .filter(|v| !v.is_warning())
        .map(|v| v.to_string())
        .collect();
    if !schema_errors.is_empty() {
        let r = RuleResult::new(rule, Outcome::Errored).with_reason(format!("invalid rule: {}", schema_errors.join("; ")));
        return (r, Vec::new());
    }
    if let Err(halt) = type_check(rule, catalog) {
        return (RuleResult::new(rule, Outcome::Halted).with_reason(format!("unevaluatable: {halt}")), Vec::new());
    }

    let mut ctx = ExecutionContext::new(doc, rule, env);
    let mut current: Option<PipelineValue> = None;
    for (i, step) in rule.pipeline.iter().enumerate() {
        let op = catalog.get(&step.operator).expect("type-checked");
        ctx.step = i;
        let decl = op.input(&step.params);
        let input = match current.take() {
            Some(v) => {
                let kind = v.kind();
                if decl.accepts(kind) {
                    Some(v)
                } else {
                    let target = decl.accepts.iter().copied().find(|&t| decl.coercible && can_coerce(kind, t));
                    match target.map(|t| coerce(v, t)) {
                        Some(Ok(v)) => Some(v),
                        _ => {
                            return finish_early(
                                ctx,
                                Outcome::Halted,
                                format!("unevaluatable: step {i} ({}) cannot use a {kind} input", step.operator),
                            )
                        }
                    }
                }
            }
            None => None,
        };
        match op.run(&mut ctx, &step.params, input.as_ref()) {
            Ok(value) => {
                if !op.passthrough() {
                    match &value {
                        PipelineValue::Diagnostics(ds) => ctx.diagnostics.extend(ds.iter().cloned()),
                        PipelineValue::Verdict(j) => ctx.diagnostics.extend(j.diagnostics.iter().cloned()),
                        _ => {}
                    }
                }
                ctx.step_outputs.push(value.clone());
                current = Some(value);
            }
            Err(e) => {
                let (outcome, reason) = match e {
                    OpError::Disabled(m) => (Outcome::Skipped, format!("step {i} ({}): {m}", step.operator)),
                    other => (Outcome::Errored, format!("step {i} ({}): {other}", step.operator)),
                };
                return finish_early(ctx, outcome, reason);
            }
        }
        if ctx.remaining().is_zero() {
            let budget = env.rule_budget.as_secs_f64();
            return finish_early(
                ctx,
                Outcome::Errored,
                format!("timed out: rule exceeded its {budget} s budget after step {i}"),
            );
        }
    }

    let notes = std::mem::take(&mut ctx.notes);
    let mut result = match current {
        Some(last) if last.kind().is_judgment() => {
            let mut diagnostics = std::mem::take(&mut ctx.diagnostics);
            if let PipelineValue::Verdict(j) = &last {
                if !j.passed && diagnostics.is_empty() {
                    let msg = j.message.clone().unwrap_or_else(|| "verdict failed".into());
                    diagnostics.push(ctx.diagnostic(Finding::new(msg)));
                }
            }
            let outcome = if diagnostics.is_empty() { Outcome::Pass } else { Outcome::Fail };
            let mut r = RuleResult::new(rule, outcome);
            r.diagnostics = diagnostics;
            r
        }
        Some(last) => {
            let mut r = RuleResult::new(rule, Outcome::Incomplete).with_reason(format!(
                "the pipeline does not yield a judgment; its last step produced {}",
                last.kind()
            ));
            r.preview = Some(last.to_yaml_truncated(PREVIEW_LIMIT));
            r
        }
        None => RuleResult::new(rule, Outcome::Halted).with_reason("unevaluatable: empty pipeline"),
    };
    result.notes = notes;
    (result, ctx.step_outputs)
}

fn finish_early(ctx: ExecutionContext, outcome: Outcome, reason: String) -> (RuleResult, Vec<PipelineValue>) {
    let mut r = RuleResult::new(ctx.rule, outcome).with_reason(reason);
    r.notes = ctx.notes;
    (r, ctx.step_outputs)
}

/// Drops diagnostics on lines carrying a directive for their rule and
/// skips globally ignored rules. Never adds a diagnostic.
pub fn apply_ignores(results: Vec<RuleResult>, ignores: &IgnoreMap, global: &BTreeSet<String>) -> Vec<RuleResult> {
    results
        .into_iter()
        .map(|mut r| {
            if global.contains(&r.rule_name) || ignores.is_globally_ignored(&r.rule_name) {
                r.outcome = Outcome::Skipped;
                r.diagnostics.clear();
                r.preview = None;
                r.reason = Some("ignored globally".into());
                return r;
            }
            let before = r.diagnostics.len();
            r.diagnostics
                .retain(|d| !ignores.is_ignored_on_line(&r.rule_name, d.span.start_line));
            let removed = before - r.diagnostics.len();
            if removed > 0 {
                r.notes.push(format!("{removed} diagnostic(s) ignored by line directives"));
                if r.outcome == Outcome::Fail && r.diagnostics.is_empty() {
                    r.outcome = Outcome::Pass;
                }
            }
            r
        })
        .collect()
}

/// Runs `rules` on one document with bounded parallelism. Results are
/// sorted by rule name, with ignore directives applied.
pub fn run_rules(rules: &[Rule], markdown: &str, env: &Environment) -> Vec<RuleResult> {
    run_rules_with(rules, markdown, env, Catalog::builtin())
}

pub fn run_rules_with(rules: &[Rule], markdown: &str, env: &Environment, catalog: &Catalog) -> Vec<RuleResult> {
    let ignores = Document::new(markdown).ignore_directives().clone();
    let results = Mutex::new(Vec::with_capacity(rules.len()));
    let next = AtomicUsize::new(0);
    let workers = env.parallelism.max(1).min(rules.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(rule) = rules.get(i) else { break };
                // Each rule gets its own parse of the document.
                let r = run_rule_with(rule, &Document::new(markdown), env, catalog);
                results.lock().unwrap().push(r);
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by(|a, b| a.rule_name.cmp(&b.rule_name));
    apply_ignores(results, &ignores, &env.ignored_rules)
}
