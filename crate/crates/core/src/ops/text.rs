use std::collections::BTreeMap;

use regex::{Regex, RegexBuilder};
use serde::Deserialize;
use serde_json::{json, Value};

use super::{parse_params, source_doc, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldIssue, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, Finding, Match, PipelineValue, ScopedExtraction, ValueKind};
use crate::md::{Document, Scope, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WalkScope {
    Document,
    Previous,
}

/// Kinds a `scope: previous` walk can read.
const STRUCTURED: [ValueKind; 6] = [
    ValueKind::Document,
    ValueKind::Extraction,
    ValueKind::Metrics,
    ValueKind::Diagnostics,
    ValueKind::Verdict,
    ValueKind::Opaque,
];

fn walk_scope(params: &Params) -> WalkScope {
    match params.get("scope").and_then(Value::as_str) {
        Some("previous") => WalkScope::Previous,
        _ => WalkScope::Document,
    }
}

fn input_for(params: &Params) -> InputDecl {
    match walk_scope(params) {
        WalkScope::Document => InputDecl::SOURCE,
        WalkScope::Previous => InputDecl {
            accepts: &STRUCTURED,
            needs_predecessor: true,
            coercible: false,
        },
    }
}

/// A piece of text to test, with where it came from.
#[derive(Debug, Clone)]
pub(crate) struct Item {
    pub text: String,
    pub span: Option<SourceSpan>,
}

fn doc_lines(doc: &Document) -> Vec<Item> {
    if doc.text().is_empty() {
        return Vec::new();
    }
    let masked = doc.masked_text();
    (1..=doc.line_count())
        .map(|line| {
            let range = doc.line_index().line_range(doc.text(), line);
            Item {
                text: masked[range.clone()].to_string(),
                span: Some(doc.span(range)),
            }
        })
        .collect()
}

/// Flattens a pipeline value into testable pieces of text.
pub(crate) fn value_items(value: &PipelineValue) -> Vec<Item> {
    match value {
        PipelineValue::Document(text) => doc_lines(&Document::new(text.as_str())),
        PipelineValue::Extraction(ex) => ex
            .items()
            .into_iter()
            .map(|m| Item {
                text: m.text.clone(),
                span: Some(m.span),
            })
            .collect(),
        PipelineValue::Metrics(summary) => summary
            .by_scope
            .values()
            .flatten()
            .map(|e| Item {
                text: e.label.clone().unwrap_or_else(|| super::metrics::number(e.value)),
                span: Some(e.span),
            })
            .collect(),
        PipelineValue::Diagnostics(diags) => diags
            .iter()
            .map(|d| Item {
                text: d.message.clone(),
                span: Some(d.span),
            })
            .collect(),
        PipelineValue::Verdict(j) => {
            let mut items: Vec<Item> = j
                .diagnostics
                .iter()
                .map(|d| Item {
                    text: d.message.clone(),
                    span: Some(d.span),
                })
                .collect();
            if let Some(m) = &j.message {
                items.push(Item { text: m.clone(), span: None });
            }
            items
        }
        PipelineValue::Opaque(v) => {
            let mut out = Vec::new();
            json_strings(v, &mut out);
            out.into_iter().map(|text| Item { text, span: None }).collect()
        }
        PipelineValue::Ast(node) => node
            .walk()
            .filter(|n| n.children.is_empty())
            .map(|n| Item {
                text: n.plain_text(),
                span: Some(n.span),
            })
            .collect(),
    }
}

fn json_strings(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Number(n) => out.push(n.to_string()),
        Value::Bool(b) => out.push(b.to_string()),
        Value::Array(items) => items.iter().for_each(|i| json_strings(i, out)),
        Value::Object(map) => map.values().for_each(|i| json_strings(i, out)),
        Value::Null => {}
    }
}

fn items_for(ctx: &ExecutionContext, scope: WalkScope, input: Option<&PipelineValue>) -> Result<Vec<Item>, OpError> {
    match scope {
        WalkScope::Document => Ok(doc_lines(&source_doc(ctx, input))),
        WalkScope::Previous => input
            .map(value_items)
            .ok_or_else(|| OpError::Failed("`scope: previous` needs a previous step".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Match,
    Unmatch,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegexMatchParams {
    patterns: Vec<String>,
    #[serde(default = "default_mode")]
    mode: Mode,
    #[serde(default = "default_walk")]
    scope: WalkScope,
    #[serde(default)]
    ignore_case: bool,
    message: Option<String>,
}

fn default_mode() -> Mode {
    Mode::Match
}

fn default_walk() -> WalkScope {
    WalkScope::Document
}

pub struct RegexMatch;

impl Operator for RegexMatch {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "regexMatch",
            "Flags lines that DO match (mode: match) or do NOT match (mode: unmatch) one or more regular expressions. Can run on the whole document or on the previous step's structured output.",
            "Document | previous -> Diagnostics",
            vec![
                field("patterns", FieldType::Array(Box::new(FieldType::Regex)), None, "Regular expressions to test."),
                field("mode", FieldType::Enum(vec!["match", "unmatch"]), Some(json!("match")), "Flag items matching any pattern, or matching none."),
                field("scope", FieldType::Enum(vec!["document", "previous"]), Some(json!("document")), "Test document lines, or the items of the previous step's output."),
                field("ignore_case", FieldType::Boolean, Some(json!(false)), "Match case-insensitively."),
                field("message", FieldType::String, Some(Value::Null), "Custom message; {text} and {pattern} are substituted."),
            ],
            &["operator: regexMatch\npatterns:\n  - TODO\nmode: match"],
        )
        .with_check(|params| match params.get("patterns").and_then(Value::as_array) {
            Some(p) if p.is_empty() => vec![FieldIssue {
                field: "patterns".into(),
                message: "`patterns` must not be empty".into(),
            }],
            _ => vec![],
        })
    }

    fn input(&self, params: &Params) -> InputDecl {
        input_for(params)
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Diagnostics)
    }

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: RegexMatchParams = parse_params(params)?;
        if p.patterns.is_empty() {
            return Err(OpError::Config("`patterns` must not be empty".into()));
        }
        let regexes = p
            .patterns
            .iter()
            .enumerate()
            .map(|(i, pat)| {
                RegexBuilder::new(pat)
                    .case_insensitive(p.ignore_case)
                    .build()
                    .map_err(|e| OpError::Config(format!("pattern {i} is invalid: {e}")))
            })
            .collect::<Result<Vec<Regex>, _>>()?;
        let items = items_for(ctx, p.scope, input)?;
        let mut diagnostics = Vec::new();
        for item in items {
            let hit = regexes.iter().position(|re| re.is_match(&item.text));
            let (flag, pattern) = match (p.mode, hit) {
                (Mode::Match, Some(i)) => (true, p.patterns[i].as_str()),
                (Mode::Unmatch, None) => (true, ""),
                _ => (false, ""),
            };
            if !flag {
                continue;
            }
            let shown = item.text.trim();
            let message = match &p.message {
                Some(t) => t.replace("{text}", shown).replace("{pattern}", pattern),
                None if p.mode == Mode::Match => format!("`{shown}` matches forbidden pattern `{pattern}`"),
                None => format!("`{shown}` does not match any of: {}", quoted(&p.patterns)),
            };
            let mut finding = Finding::new(message).text(item.text.clone());
            if let Some(span) = item.span {
                finding = finding.at(span);
            }
            diagnostics.push(ctx.diagnostic(finding));
        }
        Ok(PipelineValue::Diagnostics(diagnostics))
    }
}

fn quoted(patterns: &[String]) -> String {
    patterns.iter().map(|p| format!("`{p}`")).collect::<Vec<_>>().join(", ")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchParams {
    query: String,
    #[serde(default = "default_walk")]
    scope: WalkScope,
}

pub struct Search;

impl Operator for Search {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "search",
            "Finds lines or values containing one or more comma-separated terms (case-insensitive). Can scan the whole document or walk the previous step's structured output.",
            "Document | previous -> Extraction",
            vec![
                field("query", FieldType::String, None, "Comma-separated search terms."),
                field("scope", FieldType::Enum(vec!["document", "previous"]), Some(json!("document")), "Scan document lines, or the items of the previous step's output."),
            ],
            &["operator: search\nquery: license, licence"],
        )
        .with_check(|params| {
            let empty = params
                .get("query")
                .and_then(Value::as_str)
                .is_some_and(|q| terms(q).is_empty());
            if empty {
                vec![FieldIssue {
                    field: "query".into(),
                    message: "`query` has no non-empty terms".into(),
                }]
            } else {
                vec![]
            }
        })
    }

    fn input(&self, params: &Params) -> InputDecl {
        input_for(params)
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Extraction)
    }

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: SearchParams = parse_params(params)?;
        let terms = terms(&p.query);
        if terms.is_empty() {
            return Err(OpError::Config("`query` has no non-empty terms".into()));
        }
        let items = items_for(ctx, p.scope, input)?;
        let matches: Vec<Match> = items
            .into_iter()
            .filter(|item| {
                let lower = item.text.to_lowercase();
                terms.iter().any(|t| lower.contains(t.as_str()))
            })
            .map(|item| Match {
                span: item.span.unwrap_or_else(SourceSpan::first_line),
                text: item.text,
                node_kind: None,
                segment: 0,
                range: 0..0,
            })
            .collect();
        let doc_span = ctx.doc.span(0..ctx.doc.text().len());
        Ok(PipelineValue::Extraction(ScopedExtraction {
            target: "search".into(),
            by_scope: BTreeMap::from([(Scope::Document, matches)]),
            segments: BTreeMap::from([(Scope::Document, vec![doc_span])]),
        }))
    }
}

fn terms(query: &str) -> Vec<String> {
    query
        .split(',')
        .map(|t| t.trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}
