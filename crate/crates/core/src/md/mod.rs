//! Markdown parsing, scope segmentation and ignore-directive scanning.

mod ast;
pub mod emoji;
mod ignore;
pub mod patterns;
mod segment;
mod span;

use std::ops::Range;
use std::sync::OnceLock;

pub use ast::{parse, AstNode, NodeKind, Walk};
pub use ignore::IgnoreMap;
pub use segment::{Scope, ScopeSegment, UnknownScope};
pub use span::{LineIndex, SourceSpan};

/// A markdown source with its line index and a lazily built parse.
///
/// One instance belongs to one rule execution.
#[derive(Debug)]
pub struct Document {
    text: String,
    index: LineIndex,
    ast: OnceLock<AstNode>,
    directives: OnceLock<(IgnoreMap, Vec<Range<usize>>)>,
    masked: OnceLock<String>,
}

impl Clone for Document {
    fn clone(&self) -> Self {
        Document::new(self.text.clone())
    }
}

impl Document {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            index: LineIndex::new(&text),
            text,
            ast: OnceLock::new(),
            directives: OnceLock::new(),
            masked: OnceLock::new(),
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn line_index(&self) -> &LineIndex {
        &self.index
    }

    pub fn line_count(&self) -> usize {
        self.index.line_count()
    }

    pub fn ast(&self) -> &AstNode {
        self.ast.get_or_init(|| parse(&self.text))
    }

    pub fn span(&self, range: Range<usize>) -> SourceSpan {
        self.index.span(&self.text, range)
    }

    pub fn line_text(&self, line: usize) -> &str {
        &self.text[self.index.line_range(&self.text, line)]
    }

    pub fn segments(&self, scope: Scope) -> Vec<ScopeSegment> {
        segment::segments(&self.text, &self.index, self.ast(), scope)
    }

    fn directive_scan(&self) -> &(IgnoreMap, Vec<Range<usize>>) {
        self.directives.get_or_init(|| {
            let scan = ignore::scan(&self.text, &self.index, self.ast());
            (scan.map, scan.ranges)
        })
    }

    pub fn ignore_directives(&self) -> &IgnoreMap {
        &self.directive_scan().0
    }

    /// The source with ignore directives blanked out (same length, same
    /// line structure), so directive tokens never trigger text lints.
    pub fn masked_text(&self) -> &str {
        self.masked.get_or_init(|| {
            let ranges = &self.directive_scan().1;
            if ranges.is_empty() {
                return self.text.clone();
            }
            let mut bytes = self.text.clone().into_bytes();
            for r in ranges {
                bytes[r.clone()].fill(b' ');
            }
            // Directive tokens are ASCII-delimited, so blanking keeps UTF-8 valid.
            String::from_utf8(bytes).expect("directive masking preserves utf-8")
        })
    }

    /// First line whose text contains `needle`, if any.
    pub fn first_line_containing(&self, needle: &str) -> Option<usize> {
        let needle = needle.trim();
        if needle.is_empty() {
            return None;
        }
        (1..=self.line_count()).find(|&l| self.line_text(l).contains(needle))
    }
}

/// Splits `markdown` into segments of the given scope, ordered by position.
pub fn segment(markdown: &str, scope: Scope) -> Vec<ScopeSegment> {
    Document::new(markdown).segments(scope)
}

/// Collects `<ignore-line-for:RULE/>` directives keyed by line.
pub fn scan_ignore_directives(markdown: &str) -> IgnoreMap {
    Document::new(markdown).ignore_directives().clone()
}
