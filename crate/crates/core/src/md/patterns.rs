//! Built-in text patterns used as extraction targets.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

/// ISO-8601 dates (optionally with a time) and numeric M/D/Y shapes.
static DATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b\d{4}-\d{2}-\d{2}(?:[T ]\d{2}:\d{2}(?::\d{2})?(?:Z|[+-]\d{2}:?\d{2})?)?\b|\b\d{4}[/.]\d{1,2}[/.]\d{1,2}\b|\b\d{1,2}[/.\-]\d{1,2}[/.\-](?:\d{4}|\d{2})\b",
    )
    .unwrap()
});

static WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{L}\p{N}]+(?:['’\-][\p{L}\p{N}]+)*").unwrap());

static SENTENCE_END: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.!?]+(?:\s+|$)").unwrap());

pub fn find_dates(text: &str) -> Vec<Range<usize>> {
    DATE.find_iter(text).map(|m| m.range()).collect()
}

pub fn find_words(text: &str) -> Vec<Range<usize>> {
    WORD.find_iter(text).map(|m| m.range()).collect()
}

pub fn word_count(text: &str) -> usize {
    WORD.find_iter(text).count()
}

pub fn find_newlines(text: &str) -> Vec<Range<usize>> {
    text.match_indices('\n').map(|(i, _)| i..i + 1).collect()
}

/// Splits `block` (a slice starting at byte `base` of the source) into
/// sentences. Returned ranges are absolute and exclude surrounding whitespace.
pub fn find_sentences(block: &str, base: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let push = |out: &mut Vec<Range<usize>>, s: usize, e: usize| {
        let piece = &block[s..e];
        let lead = piece.len() - piece.trim_start().len();
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            out.push(base + s + lead..base + s + lead + trimmed.len());
        }
    };
    for m in SENTENCE_END.find_iter(block) {
        let punct_end = m.start() + block[m.range()].trim_end().len();
        push(&mut out, start, punct_end);
        start = m.end();
    }
    if start < block.len() {
        push(&mut out, start, block.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slices<'a>(text: &'a str, ranges: &[Range<usize>]) -> Vec<&'a str> {
        ranges.iter().map(|r| &text[r.clone()]).collect()
    }

    #[test]
    fn dates_cover_iso_and_mdy() {
        let text = "Released 2024-03-01, patched 3/15/2024 and 04.01.24; v1.2.3 is not a date.";
        assert_eq!(
            slices(text, &find_dates(text)),
            vec!["2024-03-01", "3/15/2024", "04.01.24"]
        );
    }

    #[test]
    fn iso_datetime_is_one_match() {
        let text = "at 2024-03-01T10:30:00Z";
        assert_eq!(slices(text, &find_dates(text)), vec!["2024-03-01T10:30:00Z"]);
    }

    #[test]
    fn words_keep_contractions() {
        assert_eq!(word_count("It's a well-known fact, 42 times."), 6);
    }

    #[test]
    fn sentences_split_on_terminal_punctuation() {
        let text = "One two. Three?\nFour! Five";
        let s = find_sentences(text, 0);
        assert_eq!(slices(text, &s), vec!["One two.", "Three?", "Four!", "Five"]);
        let offset = find_sentences("Hi. There.", 10);
        assert_eq!(offset, vec![10..13, 14..20]);
    }
}
