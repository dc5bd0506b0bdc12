use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use regex::Regex;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{parse_params, source_doc, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldIssue, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, Match, PipelineValue, ScopedExtraction, ValueKind};
use crate::md::{emoji, patterns, AstNode, Document, NodeKind, Scope};

/// Text-pattern targets, in addition to AST node kinds.
pub const PATTERN_TARGETS: [&str; 6] = ["emoji", "newline", "date", "word", "sentence", "regex"];

const ATTRIBUTES: [&str; 8] = ["text", "source", "url", "alt", "lang", "depth", "slug", "anchor"];

fn target_values() -> Vec<&'static str> {
    NodeKind::ALL
        .iter()
        .filter(|k| **k != NodeKind::Document)
        .map(|k| k.as_str())
        .chain(PATTERN_TARGETS)
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractParams {
    target: String,
    #[serde(default = "default_scopes")]
    scopes: Vec<Scope>,
    pattern: Option<String>,
    #[serde(default = "default_attribute")]
    attribute: String,
    filter: Option<String>,
}

fn default_scopes() -> Vec<Scope> {
    vec![Scope::Document]
}

fn default_attribute() -> String {
    "text".into()
}

pub struct Extract;

impl Operator for Extract {
    fn schema(&self) -> OperatorSchema {
        let scope_values: Vec<&'static str> = Scope::ALL.iter().map(|s| s.as_str()).collect();
        OperatorSchema::new(
            "extract",
            "Finds Markdown nodes or text matches (built-ins emoji, newline, date, word, sentence, or a regex pattern) and returns them grouped by the requested scopes.",
            "Document -> Extraction",
            vec![
                field("target", FieldType::Enum(target_values()), None, "AST node kind or built-in pattern to find; `regex` uses `pattern`."),
                field("scopes", FieldType::Array(Box::new(FieldType::Enum(scope_values))), Some(json!(["document"])), "Scopes to group matches by."),
                field("pattern", FieldType::Regex, Some(Value::Null), "Regular expression, required when target is `regex`."),
                field("attribute", FieldType::Enum(ATTRIBUTES.to_vec()), Some(json!("text")), "Which value of a node to report: plain text, raw source, url, alt, code lang, heading or list depth, heading slug, or `#slug` anchor."),
                field("filter", FieldType::Regex, Some(Value::Null), "Keep only matches whose reported value matches this regular expression."),
            ],
            &[
                "operator: extract\ntarget: emoji\nscopes:\n  - document\n  - paragraph\n  - line",
                "operator: extract\ntarget: heading\nattribute: anchor",
            ],
        )
        .with_check(check)
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
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
        let p: ExtractParams = parse_params(params)?;
        if p.scopes.is_empty() {
            return Err(OpError::Config("`scopes` must not be empty".into()));
        }
        let doc = source_doc(ctx, input);
        let filter = p
            .filter
            .as_deref()
            .map(Regex::new)
            .transpose()
            .map_err(|e| OpError::Config(format!("invalid filter: {e}")))?;
        let found = find_target(&doc, &p.target, p.pattern.as_deref(), &p.attribute)?;
        let found: Vec<Found> = match &filter {
            Some(re) => found.into_iter().filter(|f| re.is_match(&f.text)).collect(),
            None => found,
        };
        Ok(PipelineValue::Extraction(group(&doc, &p.target, found, &p.scopes)))
    }
}

fn check(params: &Params) -> Vec<FieldIssue> {
    let target = params.get("target").and_then(Value::as_str);
    let has_pattern = params.get("pattern").is_some_and(|v| !v.is_null());
    let mut out = Vec::new();
    if target == Some("regex") && !has_pattern {
        out.push(FieldIssue {
            field: "pattern".into(),
            message: "target `regex` requires `pattern`".into(),
        });
    }
    if has_pattern && target.is_some() && target != Some("regex") {
        out.push(FieldIssue {
            field: "pattern".into(),
            message: "`pattern` is only used with target `regex`".into(),
        });
    }
    if params.get("scopes").and_then(Value::as_array).is_some_and(|s| s.is_empty()) {
        out.push(FieldIssue {
            field: "scopes".into(),
            message: "`scopes` must not be empty".into(),
        });
    }
    out
}

/// One occurrence of a target before grouping.
pub(crate) struct Found {
    pub range: Range<usize>,
    pub text: String,
    pub kind: Option<NodeKind>,
}

pub(crate) fn find_target(
    doc: &Document,
    target: &str,
    pattern: Option<&str>,
    attribute: &str,
) -> Result<Vec<Found>, OpError> {
    let text = doc.masked_text();
    let from_ranges = |ranges: Vec<Range<usize>>| -> Vec<Found> {
        ranges
            .into_iter()
            .map(|r| Found {
                text: text[r.clone()].to_string(),
                range: r,
                kind: None,
            })
            .collect()
    };
    Ok(match target {
        "emoji" => from_ranges(emoji::find_emoji(text)),
        "newline" => from_ranges(patterns::find_newlines(text)),
        "date" => from_ranges(patterns::find_dates(text)),
        "word" => from_ranges(patterns::find_words(text)),
        "sentence" => {
            let mut ranges = Vec::new();
            for p in doc.ast().descendants_of_kind(NodeKind::Paragraph) {
                ranges.extend(patterns::find_sentences(&text[p.range.clone()], p.range.start));
            }
            from_ranges(ranges)
        }
        "regex" => {
            let pattern = pattern.ok_or_else(|| OpError::Config("target `regex` requires `pattern`".into()))?;
            let re = Regex::new(pattern).map_err(|e| OpError::Config(format!("invalid pattern: {e}")))?;
            from_ranges(re.find_iter(text).filter(|m| !m.is_empty()).map(|m| m.range()).collect())
        }
        other => {
            let kind: NodeKind = other
                .parse()
                .ok()
                .filter(|k| *k != NodeKind::Document)
                .ok_or_else(|| {
                    OpError::Config(format!(
                        "unknown target `{other}` (expected one of: {})",
                        target_values().join(", ")
                    ))
                })?;
            node_matches(doc, kind, attribute)
        }
    })
}

fn node_matches(doc: &Document, kind: NodeKind, attribute: &str) -> Vec<Found> {
    let ast = doc.ast();
    let slugs = if matches!(attribute, "slug" | "anchor") && kind == NodeKind::Heading {
        heading_slugs(ast)
    } else {
        HashMap::new()
    };
    ast.descendants_of_kind(kind)
        .map(|node| {
            let value = match attribute {
                "source" => doc.masked_text()[node.range.clone()].to_string(),
                "url" | "alt" | "lang" => node.attr(attribute).unwrap_or_default().to_string(),
                "depth" => node.depth().map(|d| d.to_string()).unwrap_or_default(),
                "slug" | "anchor" => {
                    let slug = slugs
                        .get(&node.range.start)
                        .cloned()
                        .unwrap_or_else(|| github_slug(&node.plain_text()));
                    if attribute == "anchor" {
                        format!("#{slug}")
                    } else {
                        slug
                    }
                }
                _ => literal_or_plain(node),
            };
            Found {
                range: node.range.clone(),
                text: value,
                kind: Some(kind),
            }
        })
        .collect()
}

fn literal_or_plain(node: &AstNode) -> String {
    match node.attr("value") {
        Some(v) if node.kind.is_literal() => v.to_string(),
        _ => node.plain_text(),
    }
}

/// Heading anchors as GitHub renders them, with `-1`, `-2` suffixes for
/// repeated titles. Keyed by heading start offset.
fn heading_slugs(ast: &AstNode) -> HashMap<usize, String> {
    let mut used: HashMap<String, usize> = HashMap::new();
    let mut out = HashMap::new();
    for h in ast.descendants_of_kind(NodeKind::Heading) {
        let base = github_slug(&h.plain_text());
        let n = used.entry(base.clone()).or_insert(0);
        let slug = if *n == 0 { base.clone() } else { format!("{base}-{n}") };
        *n += 1;
        out.insert(h.range.start, slug);
    }
    out
}

/// Lower-cases, drops punctuation and turns spaces into hyphens.
pub fn github_slug(title: &str) -> String {
    title
        .trim()
        .to_lowercase()
        .chars()
        .filter_map(|c| match c {
            ' ' => Some('-'),
            '-' | '_' => Some(c),
            c if c.is_alphanumeric() => Some(c),
            _ => None,
        })
        .collect()
}

pub(crate) fn group(doc: &Document, target: &str, found: Vec<Found>, scopes: &[Scope]) -> ScopedExtraction {
    let mut by_scope = BTreeMap::new();
    let mut segments = BTreeMap::new();
    for &scope in scopes {
        let segs = doc.segments(scope);
        let mut matches = Vec::new();
        for f in &found {
            let segment = match scope {
                Scope::Document => Some(0),
                Scope::Line => Some(doc.line_index().line_of(f.range.start) - 1),
                Scope::Paragraph | Scope::Collection => segs
                    .iter()
                    .position(|s| s.range.start <= f.range.start && f.range.end <= s.range.end),
            };
            if let Some(segment) = segment {
                matches.push(Match {
                    text: f.text.clone(),
                    span: doc.span(f.range.clone()),
                    node_kind: f.kind,
                    segment,
                    range: f.range.clone(),
                });
            }
        }
        let mut spans: Vec<_> = segs.iter().map(|s| s.span).collect();
        if scope == Scope::Document && spans.is_empty() {
            spans.push(doc.span(0..doc.text().len()));
        }
        segments.insert(scope, spans);
        by_scope.insert(scope, matches);
    }
    ScopedExtraction {
        target: target.into(),
        by_scope,
        segments,
    }
}
