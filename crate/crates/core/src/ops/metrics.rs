use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_params, source_doc, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldType, OperatorSchema};
use crate::engine::{
    count_extraction, ExecutionContext, Finding, Judgment, MetricEntry, MetricSummary, PipelineValue, ValueKind,
};
use crate::md::{patterns, Scope};

pub struct Count;

impl Operator for Count {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "count",
            "Aggregates counts from the previous step's extracted results and summarizes them by scope (per line, per paragraph, or per collection). The document scope holds the total.",
            "Extraction -> Metrics",
            vec![],
            &["operator: count"],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl {
            accepts: &[ValueKind::Extraction],
            needs_predecessor: true,
            coercible: true,
        }
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Metrics)
    }

    fn run(&self, _: &mut ExecutionContext, _: &Params, input: Option<&PipelineValue>) -> Result<PipelineValue, OpError> {
        match input {
            Some(PipelineValue::Extraction(ex)) => Ok(PipelineValue::Metrics(count_extraction(ex))),
            other => Err(OpError::Failed(format!(
                "count needs an extraction, got {}",
                other.map_or("nothing".into(), |v| v.kind().to_string())
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Unit {
    Chars,
    Words,
}

impl Unit {
    fn measure(self, text: &str) -> f64 {
        match self {
            Unit::Chars => text.chars().count() as f64,
            Unit::Words => patterns::word_count(text) as f64,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LengthParams {
    #[serde(default = "default_unit")]
    unit: Unit,
    #[serde(default = "default_scopes")]
    scopes: Vec<Scope>,
}

fn default_unit() -> Unit {
    Unit::Chars
}

fn default_scopes() -> Vec<Scope> {
    vec![Scope::Document]
}

pub struct Length;

impl Operator for Length {
    fn schema(&self) -> OperatorSchema {
        let scopes: Vec<&'static str> = Scope::ALL.iter().map(|s| s.as_str()).collect();
        OperatorSchema::new(
            "length",
            "Measures the length of each extracted match, or of each document segment when given the document. The document scope holds the total.",
            "Extraction | Document -> Metrics",
            vec![
                field("unit", FieldType::Enum(vec!["chars", "words"]), Some(json!("chars")), "Count characters or words."),
                field(
                    "scopes",
                    FieldType::Array(Box::new(FieldType::Enum(scopes))),
                    Some(json!(["document"])),
                    "Segments to measure when the input is the document itself.",
                ),
            ],
            &["operator: length\nunit: words"],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl {
            accepts: &[ValueKind::Extraction, ValueKind::Document],
            needs_predecessor: false,
            coercible: true,
        }
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Metrics)
    }

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: LengthParams = parse_params(params)?;
        let unit_name = match p.unit {
            Unit::Chars => "length (chars)",
            Unit::Words => "length (words)",
        };
        let mut by_scope = BTreeMap::new();
        let metric = match input {
            Some(PipelineValue::Extraction(ex)) => {
                for (&scope, matches) in &ex.by_scope {
                    let entries = if scope == Scope::Document {
                        let total = matches.iter().map(|m| p.unit.measure(&m.text)).sum();
                        let span = ex
                            .segments
                            .get(&Scope::Document)
                            .and_then(|s| s.first().copied())
                            .unwrap_or_else(crate::md::SourceSpan::first_line);
                        vec![MetricEntry {
                            span,
                            value: total,
                            segment: Some(0),
                            label: None,
                        }]
                    } else {
                        matches
                            .iter()
                            .map(|m| MetricEntry {
                                span: m.span,
                                value: p.unit.measure(&m.text),
                                segment: Some(m.segment),
                                label: Some(label(&m.text)),
                            })
                            .collect()
                    };
                    by_scope.insert(scope, entries);
                }
                format!("{} {unit_name}", ex.target)
            }
            _ => {
                let doc = source_doc(ctx, input);
                for &scope in &p.scopes {
                    let entries = doc
                        .segments(scope)
                        .into_iter()
                        .map(|s| MetricEntry {
                            span: s.span,
                            value: p.unit.measure(&s.text),
                            segment: Some(s.index),
                            label: (scope != Scope::Document).then(|| label(&s.text)),
                        })
                        .collect();
                    by_scope.insert(scope, entries);
                }
                unit_name.to_string()
            }
        };
        Ok(PipelineValue::Metrics(MetricSummary { metric, by_scope }))
    }
}

fn label(text: &str) -> String {
    const MAX: usize = 60;
    let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= MAX {
        flat
    } else {
        let cut: String = flat.chars().take(MAX).collect();
        format!("{cut}...")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    LessThan,
    LessThanOrEqual,
    GreaterThan,
    GreaterThanOrEqual,
    Equal,
}

impl Comparator {
    pub const ALL: [Comparator; 5] = [
        Comparator::LessThan,
        Comparator::LessThanOrEqual,
        Comparator::GreaterThan,
        Comparator::GreaterThanOrEqual,
        Comparator::Equal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::LessThan => "lessthan",
            Comparator::LessThanOrEqual => "lessthanorequal",
            Comparator::GreaterThan => "greaterthan",
            Comparator::GreaterThanOrEqual => "greaterthanorequal",
            Comparator::Equal => "equal",
        }
    }

    fn phrase(self) -> &'static str {
        match self {
            Comparator::LessThan => "less than",
            Comparator::LessThanOrEqual => "at most",
            Comparator::GreaterThan => "more than",
            Comparator::GreaterThanOrEqual => "at least",
            Comparator::Equal => "exactly",
        }
    }

    /// True when `value` satisfies the condition.
    pub fn holds(self, value: f64, limit: f64) -> bool {
        match self {
            Comparator::LessThan => value < limit,
            Comparator::LessThanOrEqual => value <= limit,
            Comparator::GreaterThan => value > limit,
            Comparator::GreaterThanOrEqual => value >= limit,
            Comparator::Equal => value == limit,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Condition {
    scope: Scope,
    comparator: Comparator,
    limit: f64,
    message: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdParams {
    conditions: Vec<Condition>,
}

pub struct Threshold;

impl Operator for Threshold {
    fn schema(&self) -> OperatorSchema {
        let scopes: Vec<&'static str> = Scope::ALL.iter().map(|s| s.as_str()).collect();
        let comparators: Vec<&'static str> = Comparator::ALL.iter().map(|c| c.as_str()).collect();
        let condition = vec![
            field("scope", FieldType::Enum(scopes), None, "Scope whose metric entries are checked."),
            field("comparator", FieldType::Enum(comparators), None, "How each value must relate to the limit."),
            field("limit", FieldType::Number, None, "The bound."),
            field(
                "message",
                FieldType::String,
                Some(Value::Null),
                "Custom message; {scope}, {value}, {limit} and {comparator} are substituted.",
            ),
        ];
        OperatorSchema::new(
            "threshold",
            "Compares computed metrics from a previous step (count or length) against per-scope conditions and reports each violating entry.",
            "Metrics -> Verdict",
            vec![field(
                "conditions",
                FieldType::Array(Box::new(FieldType::Object(condition))),
                None,
                "One condition per scope to check.",
            )],
            &["operator: threshold\nconditions:\n  - scope: document\n    comparator: lessthan\n    limit: 20"],
        )
        .with_check(|params| {
            match params.get("conditions").and_then(Value::as_array) {
                Some(c) if c.is_empty() => vec![crate::dsl::FieldIssue {
                    field: "conditions".into(),
                    message: "`conditions` must not be empty".into(),
                }],
                _ => vec![],
            }
        })
    }

    fn input(&self, _: &Params) -> InputDecl {
        // Strict: an extraction is not silently collapsed into counts here.
        InputDecl {
            accepts: &[ValueKind::Metrics],
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
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: ThresholdParams = parse_params(params)?;
        if p.conditions.is_empty() {
            return Err(OpError::Config("`conditions` must not be empty".into()));
        }
        let Some(PipelineValue::Metrics(summary)) = input else {
            return Err(OpError::Failed("threshold needs metrics from a previous step".into()));
        };
        let findings = evaluate_conditions(summary, &conditions_of(&p))?;
        let diagnostics: Vec<_> = findings.into_iter().map(|f| ctx.diagnostic(f)).collect();
        Ok(PipelineValue::Verdict(Judgment {
            passed: diagnostics.is_empty(),
            diagnostics,
            message: None,
        }))
    }
}

fn conditions_of(p: &ThresholdParams) -> Vec<(Scope, Comparator, f64, Option<String>)> {
    p.conditions
        .iter()
        .map(|c| (c.scope, c.comparator, c.limit, c.message.clone()))
        .collect()
}

/// One finding per metric entry that fails its scope's condition.
pub(crate) fn evaluate_conditions(
    summary: &MetricSummary,
    conditions: &[(Scope, Comparator, f64, Option<String>)],
) -> Result<Vec<Finding>, OpError> {
    let mut out = Vec::new();
    for (scope, comparator, limit, message) in conditions {
        let Some(entries) = summary.by_scope.get(scope) else {
            let available: Vec<_> = summary.by_scope.keys().map(|s| s.as_str()).collect();
            return Err(OpError::Config(format!(
                "condition references scope `{scope}` absent from the metrics (available: {})",
                available.join(", ")
            )));
        };
        for entry in entries {
            if comparator.holds(entry.value, *limit) {
                continue;
            }
            let place = place_name(*scope, entry);
            let text = match message {
                Some(template) => template
                    .replace("{scope}", &place)
                    .replace("{value}", &number(entry.value))
                    .replace("{limit}", &number(*limit))
                    .replace("{comparator}", comparator.phrase()),
                None => format!(
                    "{place}: {} is {}, expected {} {}",
                    summary.metric,
                    number(entry.value),
                    comparator.phrase(),
                    number(*limit)
                ),
            };
            out.push(Finding::new(text).at(entry.span));
        }
    }
    Ok(out)
}

fn place_name(scope: Scope, entry: &MetricEntry) -> String {
    let ordinal = entry.segment.unwrap_or(0) + 1;
    match scope {
        Scope::Document => "document".into(),
        Scope::Paragraph => format!("paragraph {ordinal}"),
        Scope::Line => format!("line {}", entry.span.start_line),
        Scope::Collection => format!("list {ordinal}"),
    }
}

pub(crate) fn number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::SourceSpan;

    fn summary(scope: Scope, values: &[f64]) -> MetricSummary {
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, &v)| MetricEntry {
                span: SourceSpan::line(i + 1),
                value: v,
                segment: Some(i),
                label: None,
            })
            .collect();
        MetricSummary {
            metric: "emoji count".into(),
            by_scope: BTreeMap::from([(scope, entries)]),
        }
    }

    #[test]
    fn emoji_line_condition_flags_two() {
        let s = summary(Scope::Line, &[2.0, 1.0]);
        let f = evaluate_conditions(&s, &[(Scope::Line, Comparator::LessThan, 2.0, None)]).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].message, "line 1: emoji count is 2, expected less than 2");
    }

    #[test]
    fn equal_on_boundary_passes() {
        let s = summary(Scope::Document, &[5.0]);
        assert!(evaluate_conditions(&s, &[(Scope::Document, Comparator::Equal, 5.0, None)])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn absent_scope_is_a_config_error() {
        let s = summary(Scope::Line, &[1.0]);
        let err = evaluate_conditions(&s, &[(Scope::Paragraph, Comparator::LessThan, 1.0, None)]).unwrap_err();
        assert!(matches!(err, OpError::Config(m) if m.contains("`paragraph`")));
    }
}
