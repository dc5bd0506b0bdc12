use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// A 1-based line/column region of a document. The end column points one
/// character past the last character covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceSpan {
    pub start_line: usize,
    pub start_column: usize,
    pub end_line: usize,
    pub end_column: usize,
}

impl SourceSpan {
    pub fn new(start_line: usize, start_column: usize, end_line: usize, end_column: usize) -> Self {
        Self {
            start_line,
            start_column,
            end_line,
            end_column,
        }
    }

    /// The conservative fallback anchor used when nothing better is known.
    pub fn first_line() -> Self {
        Self::new(1, 1, 1, 1)
    }

    /// A span covering the whole of `line` (columns unknown).
    pub fn line(line: usize) -> Self {
        Self::new(line, 1, line, 1)
    }

    pub fn start(&self) -> (usize, usize) {
        (self.start_line, self.start_column)
    }

    pub fn end(&self) -> (usize, usize) {
        (self.end_line, self.end_column)
    }

    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.start() <= other.start() && other.end() <= self.end()
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}-{}:{}",
            self.start_line, self.start_column, self.end_line, self.end_column
        )
    }
}

/// Maps byte offsets into line/column positions.
///
/// Lines are split on LF; a CR immediately before the LF belongs to the
/// terminator, so CRLF files get the same spans as LF files.
#[derive(Debug, Clone)]
pub struct LineIndex {
    starts: Vec<usize>,
    len: usize,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        Self {
            starts,
            len: text.len(),
        }
    }

    /// Number of lines, counting the (possibly empty) text after the last LF.
    pub fn line_count(&self) -> usize {
        self.starts.len()
    }

    /// Byte range of `line` (1-based) without its terminator.
    pub fn line_range(&self, text: &str, line: usize) -> Range<usize> {
        let start = self.starts[line - 1];
        let mut end = self
            .starts
            .get(line)
            .map(|next| next - 1)
            .unwrap_or(self.len);
        if end > start && text.as_bytes()[end - 1] == b'\r' && end < self.len {
            end -= 1;
        }
        start..end
    }

    /// 1-based line containing `offset`.
    pub fn line_of(&self, offset: usize) -> usize {
        match self.starts.binary_search(&offset) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
    }

    pub fn position(&self, text: &str, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.len);
        let line = self.line_of(offset);
        let start = self.starts[line - 1];
        let column = text[start..offset].chars().count() + 1;
        (line, column)
    }

    pub fn span(&self, text: &str, range: Range<usize>) -> SourceSpan {
        let (start_line, start_column) = self.position(text, range.start);
        let (end_line, end_column) = self.position(text, range.end.max(range.start));
        SourceSpan::new(start_line, start_column, end_line, end_column)
    }
}
