use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ast::{AstNode, NodeKind};
use super::span::{LineIndex, SourceSpan};

/// Granularity at which matches and metrics are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Document,
    Paragraph,
    Line,
    /// One segment per top-level list.
    Collection,
}

impl Scope {
    pub const ALL: [Scope; 4] = [Scope::Document, Scope::Paragraph, Scope::Line, Scope::Collection];

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Document => "document",
            Scope::Paragraph => "paragraph",
            Scope::Line => "line",
            Scope::Collection => "collection",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scope `{0}` (expected one of: document, paragraph, line, collection)")]
pub struct UnknownScope(pub String);

impl FromStr for Scope {
    type Err = UnknownScope;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scope::ALL
            .into_iter()
            .find(|scope| scope.as_str() == s)
            .ok_or_else(|| UnknownScope(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeSegment {
    pub scope: Scope,
    pub index: usize,
    pub span: SourceSpan,
    pub text: String,
    #[serde(skip)]
    pub range: Range<usize>,
}

pub(crate) fn segments(
    text: &str,
    index: &LineIndex,
    ast: &AstNode,
    scope: Scope,
) -> Vec<ScopeSegment> {
    let make = |i: usize, range: Range<usize>| ScopeSegment {
        scope,
        index: i,
        span: index.span(text, range.clone()),
        text: text[range.clone()].to_string(),
        range,
    };
    match scope {
        Scope::Document => vec![make(0, 0..text.len())],
        Scope::Line if text.is_empty() => Vec::new(),
        Scope::Line => (1..=index.line_count())
            .map(|line| make(line - 1, index.line_range(text, line)))
            .collect(),
        Scope::Paragraph => top_level(ast, NodeKind::Paragraph)
            .enumerate()
            .map(|(i, n)| make(i, n.range.clone()))
            .collect(),
        Scope::Collection => top_level(ast, NodeKind::List)
            .enumerate()
            .map(|(i, n)| make(i, n.range.clone()))
            .collect(),
    }
}

fn top_level(ast: &AstNode, kind: NodeKind) -> impl Iterator<Item = &AstNode> {
    ast.children.iter().filter(move |n| n.kind == kind)
}
