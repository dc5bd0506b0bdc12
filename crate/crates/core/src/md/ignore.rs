use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ast::{AstNode, NodeKind};
use super::span::LineIndex;
use crate::naming::canonical_rule_name;

/// `<ignore-line-for:RULE/>` with no whitespace anywhere inside the tag.
static DIRECTIVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<ignore-line-for:([^\s<>/]+)/>").unwrap());

/// Rules exempted globally and per line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IgnoreMap {
    pub global_rules: BTreeSet<String>,
    pub per_line: BTreeMap<usize, BTreeSet<String>>,
}

impl IgnoreMap {
    pub fn is_empty(&self) -> bool {
        self.global_rules.is_empty() && self.per_line.is_empty()
    }

    pub fn ignore_globally(&mut self, rule: &str) {
        self.global_rules.insert(canonical_rule_name(rule));
    }

    pub fn is_globally_ignored(&self, rule: &str) -> bool {
        self.global_rules.contains(&canonical_rule_name(rule))
    }

    pub fn is_ignored_on_line(&self, rule: &str, line: usize) -> bool {
        self.per_line
            .get(&line)
            .is_some_and(|rules| rules.contains(&canonical_rule_name(rule)))
    }
}

pub(crate) struct DirectiveScan {
    pub map: IgnoreMap,
    /// Byte ranges of the directive tokens themselves.
    pub ranges: Vec<Range<usize>>,
}

/// Finds directives outside code blocks and inline code.
pub(crate) fn scan(text: &str, index: &LineIndex, ast: &AstNode) -> DirectiveScan {
    let code: Vec<Range<usize>> = ast
        .walk()
        .filter(|n| matches!(n.kind, NodeKind::Code | NodeKind::InlineCode))
        .map(|n| n.range.clone())
        .collect();
    let mut map = IgnoreMap::default();
    let mut ranges = Vec::new();
    for caps in DIRECTIVE.captures_iter(text) {
        let whole = caps.get(0).unwrap();
        if code.iter().any(|r| r.start <= whole.start() && whole.end() <= r.end) {
            continue;
        }
        let line = index.line_of(whole.start());
        map.per_line
            .entry(line)
            .or_default()
            .insert(canonical_rule_name(&caps[1]));
        ranges.push(whole.range());
    }
    DirectiveScan { map, ranges }
}

#[cfg(test)]
mod tests {
    use crate::md::scan_ignore_directives as scan_text;

    #[test]
    fn inline_directive_on_first_line() {
        let map = scan_text("x <ignore-line-for:enforce-emoji-limit/>");
        assert_eq!(map.per_line.len(), 1);
        assert!(map.per_line[&1].contains("enforce-emoji-limit"));
    }

    #[test]
    fn plain_document_is_empty() {
        assert!(scan_text("# Title\n\nNothing to see.").is_empty());
    }

    #[test]
    fn two_directives_for_different_rules() {
        let md = "a\nb <ignore-line-for:rule-a/>\nc\nd\n<!-- <ignore-line-for:ruleB/> -->\n";
        let map = scan_text(md);
        assert_eq!(map.per_line.len(), 2);
        assert!(map.is_ignored_on_line("rule-a", 2));
        assert!(map.is_ignored_on_line("rule-b", 5));
        assert!(!map.is_ignored_on_line("rule-a", 5));
    }

    #[test]
    fn whitespace_inside_tag_is_rejected() {
        assert!(scan_text("<ignore-line-for: x/>").is_empty());
        assert!(scan_text("<ignore-line-for:x />").is_empty());
        assert!(scan_text("<ignore-line-for:/>").is_empty());
    }

    #[test]
    fn directives_in_code_are_inert() {
        let md = "`<ignore-line-for:a/>`\n\n```\n<ignore-line-for:b/>\n```\n";
        assert!(scan_text(md).is_empty());
    }
}
