use std::collections::{BTreeSet, HashSet};

use serde::Deserialize;
use serde_json::{json, Value};

use super::text::{value_items, Item};
use super::{parse_params, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, Finding, Judgment, PipelineValue, ValueKind};
use crate::md::patterns;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum StepRef {
    Index(usize),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CompareMode {
    Structural,
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMethod {
    TokenSet,
    Jaccard,
    Levenshtein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Report {
    Both,
    Missing,
    Extra,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareParams {
    baseline: StepRef,
    against: StepRef,
    #[serde(default = "default_mode")]
    comparison_mode: CompareMode,
    #[serde(default = "default_method")]
    similarity_method: SimilarityMethod,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default = "default_report")]
    report: Report,
    message: Option<String>,
}

fn default_mode() -> CompareMode {
    CompareMode::Structural
}
fn default_method() -> SimilarityMethod {
    SimilarityMethod::TokenSet
}
fn default_threshold() -> f64 {
    0.8
}
fn default_report() -> Report {
    Report::Both
}

pub struct Compare;

impl Operator for Compare {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "compare",
            "Compares outputs from two earlier steps either structurally (missing/extra items) or by similarity scoring.",
            "steps[baseline], steps[against] -> Verdict",
            vec![
                field("baseline", FieldType::StepRef, None, "Reference step: an earlier step index (0-based) or `document`."),
                field("against", FieldType::StepRef, None, "Step compared with the baseline: an earlier step index (0-based) or `document`."),
                field("comparison_mode", FieldType::Enum(vec!["structural", "similarity"]), Some(json!("structural")), "Report item differences, or score overall similarity."),
                field("similarity_method", FieldType::Enum(vec!["token_set", "jaccard", "levenshtein"]), Some(json!("token_set")), "Scoring method in similarity mode."),
                field("threshold", FieldType::Number, Some(json!(0.8)), "Minimum similarity in [0, 1] for a pass."),
                field("report", FieldType::Enum(vec!["both", "missing", "extra"]), Some(json!("both")), "In structural mode, which differences to report."),
                field("message", FieldType::String, Some(Value::Null), "Custom message for structural differences; {item} is substituted."),
            ],
            &["operator: compare\nbaseline: 0\nagainst: 1\ncomparison_mode: structural\nreport: missing"],
        )
        .with_check(|params| {
            let mut out = Vec::new();
            if let Some(t) = params.get("threshold").and_then(Value::as_f64) {
                if !(0.0..=1.0).contains(&t) {
                    out.push(crate::dsl::FieldIssue {
                        field: "threshold".into(),
                        message: format!("threshold {t} is outside [0, 1]"),
                    });
                }
            }
            out
        })
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl {
            accepts: &ValueKind::ALL,
            needs_predecessor: true,
            coercible: false,
        }
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Verdict)
    }

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        _: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: CompareParams = parse_params(params)?;
        let baseline = resolve(ctx, &p.baseline)?;
        let against = resolve(ctx, &p.against)?;
        let (base_name, against_name) = (ref_name(&p.baseline), ref_name(&p.against));
        let findings = match p.comparison_mode {
            CompareMode::Structural => {
                let b = value_items(&baseline);
                let a = value_items(&against);
                let mut findings = Vec::new();
                if p.report != Report::Extra {
                    for item in difference(&b, &a) {
                        let msg = p.message.as_ref().map_or_else(
                            || format!("`{}` from {base_name} is missing in {against_name}", item.text.trim()),
                            |t| t.replace("{item}", item.text.trim()),
                        );
                        findings.push(finding(msg, item));
                    }
                }
                if p.report != Report::Missing {
                    for item in difference(&a, &b) {
                        let msg = p.message.as_ref().map_or_else(
                            || format!("`{}` in {against_name} has no counterpart in {base_name}", item.text.trim()),
                            |t| t.replace("{item}", item.text.trim()),
                        );
                        findings.push(finding(msg, item));
                    }
                }
                findings
            }
            CompareMode::Similarity => {
                let score = similarity(&joined(&baseline), &joined(&against), p.similarity_method);
                if score < p.threshold {
                    vec![Finding::new(format!(
                        "similarity between {base_name} and {against_name} is {score:.2}, below {:.2}",
                        p.threshold
                    ))]
                } else {
                    ctx.note(format!("similarity {score:.2}"));
                    vec![]
                }
            }
        };
        let diagnostics: Vec<_> = findings.into_iter().map(|f| ctx.diagnostic(f)).collect();
        Ok(PipelineValue::Verdict(Judgment {
            passed: diagnostics.is_empty(),
            diagnostics,
            message: None,
        }))
    }
}

fn finding(message: String, item: &Item) -> Finding {
    let f = Finding::new(message).text(item.text.clone());
    match item.span {
        Some(span) => f.at(span),
        None => f,
    }
}

fn resolve(ctx: &ExecutionContext, r: &StepRef) -> Result<PipelineValue, OpError> {
    match r {
        StepRef::Named(n) if n == "document" => Ok(PipelineValue::Document(ctx.markdown().to_string())),
        StepRef::Named(n) => Err(OpError::Config(format!("unknown step reference `{n}`"))),
        StepRef::Index(i) => ctx.step_outputs.get(*i).cloned().ok_or_else(|| {
            OpError::Config(format!(
                "step reference {i} does not name a completed earlier step ({} completed)",
                ctx.step_outputs.len()
            ))
        }),
    }
}

fn ref_name(r: &StepRef) -> String {
    match r {
        StepRef::Index(i) => format!("step {i}"),
        StepRef::Named(n) => n.clone(),
    }
}

fn key(text: &str) -> String {
    text.trim().to_string()
}

/// Items of `left` whose text appears nowhere in `right`, first occurrence only.
fn difference<'a>(left: &'a [Item], right: &[Item]) -> Vec<&'a Item> {
    let right: HashSet<String> = right.iter().map(|i| key(&i.text)).collect();
    let mut seen = HashSet::new();
    left.iter()
        .filter(|i| !key(&i.text).is_empty())
        .filter(|i| !right.contains(&key(&i.text)) && seen.insert(key(&i.text)))
        .collect()
}

fn joined(value: &PipelineValue) -> String {
    match value {
        PipelineValue::Document(t) => t.clone(),
        PipelineValue::Opaque(Value::String(s)) => s.clone(),
        other => value_items(other).into_iter().map(|i| i.text).collect::<Vec<_>>().join("\n"),
    }
}

fn token_set(text: &str) -> BTreeSet<String> {
    patterns::find_words(text)
        .into_iter()
        .map(|r| text[r].to_lowercase())
        .collect()
}

/// Similarity in [0, 1]; identical inputs score 1.
pub fn similarity(a: &str, b: &str, method: SimilarityMethod) -> f64 {
    match method {
        SimilarityMethod::Levenshtein => strsim::normalized_levenshtein(a, b),
        SimilarityMethod::Jaccard => {
            let (sa, sb) = (token_set(a), token_set(b));
            let union = sa.union(&sb).count();
            if union == 0 {
                1.0
            } else {
                sa.intersection(&sb).count() as f64 / union as f64
            }
        }
        SimilarityMethod::TokenSet => {
            // Ratio of sorted token sets: shared tokens alone, then shared
            // plus each side's remainder; the best pairing wins.
            let (sa, sb) = (token_set(a), token_set(b));
            if sa.is_empty() && sb.is_empty() {
                return 1.0;
            }
            let common: Vec<&str> = sa.intersection(&sb).map(String::as_str).collect();
            let only_a: Vec<&str> = sa.difference(&sb).map(String::as_str).collect();
            let only_b: Vec<&str> = sb.difference(&sa).map(String::as_str).collect();
            let t0 = common.join(" ");
            let t1 = [t0.as_str(), &only_a.join(" ")].join(" ").trim().to_string();
            let t2 = [t0.as_str(), &only_b.join(" ")].join(" ").trim().to_string();
            let ratio = |x: &str, y: &str| -> f64 {
                if x.is_empty() && y.is_empty() {
                    1.0
                } else {
                    similar::TextDiff::from_chars(x, y).ratio() as f64
                }
            };
            let mut best = ratio(&t1, &t2);
            if !t0.is_empty() {
                best = best.max(ratio(&t0, &t1)).max(ratio(&t0, &t2));
            }
            best
        }
    }
}
