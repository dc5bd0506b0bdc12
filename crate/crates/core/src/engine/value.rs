use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::Serialize;

use crate::dsl::Severity;
use crate::md::{AstNode, Document, NodeKind, Scope, SourceSpan};

/// The kinds of values exchanged between pipeline steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ValueKind {
    Document,
    Ast,
    Extraction,
    Metrics,
    Diagnostics,
    Verdict,
    Opaque,
}

impl ValueKind {
    pub const ALL: [ValueKind; 7] = [
        ValueKind::Document,
        ValueKind::Ast,
        ValueKind::Extraction,
        ValueKind::Metrics,
        ValueKind::Diagnostics,
        ValueKind::Verdict,
        ValueKind::Opaque,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Document => "Document",
            ValueKind::Ast => "Ast",
            ValueKind::Extraction => "Extraction",
            ValueKind::Metrics => "Metrics",
            ValueKind::Diagnostics => "Diagnostics",
            ValueKind::Verdict => "Verdict",
            ValueKind::Opaque => "Opaque",
        }
    }

    /// Diagnostics and verdicts are judgments; anything else leaves a
    /// pipeline incomplete.
    pub fn is_judgment(self) -> bool {
        matches!(self, ValueKind::Diagnostics | ValueKind::Verdict)
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Match {
    pub text: String,
    pub span: SourceSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_kind: Option<NodeKind>,
    /// Index of the scope segment holding the match.
    pub segment: usize,
    #[serde(skip)]
    pub range: Range<usize>,
}

/// Matches grouped by requested scope. Every requested scope is a key.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScopedExtraction {
    pub target: String,
    pub by_scope: BTreeMap<Scope, Vec<Match>>,
    /// Spans of every segment per scope, so counts can anchor to segments.
    #[serde(skip)]
    pub segments: BTreeMap<Scope, Vec<SourceSpan>>,
}

impl ScopedExtraction {
    /// All matches once each, preferring the document scope when present.
    pub fn items(&self) -> Vec<&Match> {
        if let Some(doc) = self.by_scope.get(&Scope::Document) {
            return doc.iter().collect();
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for matches in self.by_scope.values() {
            for m in matches {
                if seen.insert((m.range.start, m.range.end, m.text.as_str())) {
                    out.push(m);
                }
            }
        }
        out.sort_by_key(|m| (m.range.start, m.range.end));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricEntry {
    pub span: SourceSpan,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment: Option<usize>,
    /// Text the value was computed from, when short enough to be useful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Numeric aggregates per scope. The document scope carries one entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricSummary {
    /// What was measured, e.g. `emoji count`.
    pub metric: String,
    pub by_scope: BTreeMap<Scope, Vec<MetricEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    pub rule_name: String,
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fix_hint: Option<String>,
    /// Pipeline step that produced the diagnostic.
    pub step: usize,
}

/// Pass or fail, with the diagnostics that justify a failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Judgment {
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "camelCase")]
pub enum PipelineValue {
    Document(String),
    Ast(AstNode),
    Extraction(ScopedExtraction),
    Metrics(MetricSummary),
    Diagnostics(Vec<Diagnostic>),
    Verdict(Judgment),
    Opaque(serde_json::Value),
}

impl PipelineValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            PipelineValue::Document(_) => ValueKind::Document,
            PipelineValue::Ast(_) => ValueKind::Ast,
            PipelineValue::Extraction(_) => ValueKind::Extraction,
            PipelineValue::Metrics(_) => ValueKind::Metrics,
            PipelineValue::Diagnostics(_) => ValueKind::Diagnostics,
            PipelineValue::Verdict(_) => ValueKind::Verdict,
            PipelineValue::Opaque(_) => ValueKind::Opaque,
        }
    }

    /// YAML rendering used for previews and LLM prompts, cut to `limit` bytes.
    pub fn to_yaml_truncated(&self, limit: usize) -> String {
        let text = serde_yaml::to_string(self).unwrap_or_else(|e| format!("<unserializable: {e}>"));
        truncate(&text, limit)
    }
}

pub(crate) fn truncate(text: &str, limit: usize) -> String {
    if text.len() <= limit {
        return text.to_string();
    }
    let mut cut = limit;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    format!("{}\n... (truncated, {} bytes total)", &text[..cut], text.len())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot coerce {from} into {to}")]
pub struct CoercionError {
    pub from: ValueKind,
    pub to: ValueKind,
}

/// Legal implicit conversions, besides identity.
pub const COERCIONS: [(ValueKind, ValueKind); 3] = [
    (ValueKind::Document, ValueKind::Ast),
    (ValueKind::Document, ValueKind::Extraction),
    (ValueKind::Extraction, ValueKind::Metrics),
];

pub fn can_coerce(from: ValueKind, to: ValueKind) -> bool {
    from == to || COERCIONS.contains(&(from, to))
}

/// Converts `value` into `expected` using the fixed coercion matrix.
pub fn coerce(value: PipelineValue, expected: ValueKind) -> Result<PipelineValue, CoercionError> {
    let from = value.kind();
    if from == expected {
        return Ok(value);
    }
    match (value, expected) {
        (PipelineValue::Document(text), ValueKind::Ast) => Ok(PipelineValue::Ast(crate::md::parse(&text))),
        (PipelineValue::Document(text), ValueKind::Extraction) => {
            Ok(PipelineValue::Extraction(document_extraction(&text)))
        }
        (PipelineValue::Extraction(ex), ValueKind::Metrics) => Ok(PipelineValue::Metrics(count_extraction(&ex))),
        _ => Err(CoercionError { from, to: expected }),
    }
}

/// The whole text as a single document-scope match.
pub fn document_extraction(text: &str) -> ScopedExtraction {
    let doc = Document::new(text);
    let span = doc.span(0..text.len());
    let mut by_scope = BTreeMap::new();
    by_scope.insert(
        Scope::Document,
        vec![Match {
            text: text.to_string(),
            span,
            node_kind: None,
            segment: 0,
            range: 0..text.len(),
        }],
    );
    let mut segments = BTreeMap::new();
    segments.insert(Scope::Document, vec![span]);
    ScopedExtraction {
        target: "document".into(),
        by_scope,
        segments,
    }
}

/// Collapses matches into counts: one entry per segment that has matches,
/// and always exactly one document entry when the document scope exists.
pub fn count_extraction(ex: &ScopedExtraction) -> MetricSummary {
    let mut by_scope = BTreeMap::new();
    for (&scope, matches) in &ex.by_scope {
        let seg_spans = ex.segments.get(&scope);
        let entries = if scope == Scope::Document {
            let span = seg_spans
                .and_then(|s| s.first().copied())
                .unwrap_or_else(SourceSpan::first_line);
            vec![MetricEntry {
                span,
                value: matches.len() as f64,
                segment: Some(0),
                label: None,
            }]
        } else {
            let mut per_segment: BTreeMap<usize, (usize, SourceSpan)> = BTreeMap::new();
            for m in matches {
                let span = seg_spans.and_then(|s| s.get(m.segment).copied()).unwrap_or(m.span);
                per_segment.entry(m.segment).or_insert((0, span)).0 += 1;
            }
            per_segment
                .into_iter()
                .map(|(segment, (n, span))| MetricEntry {
                    span,
                    value: n as f64,
                    segment: Some(segment),
                    label: None,
                })
                .collect()
        };
        by_scope.insert(scope, entries);
    }
    MetricSummary {
        metric: format!("{} count", ex.target),
        by_scope,
    }
}
