use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use markdown::mdast;
use serde::{Deserialize, Serialize};

use super::span::{LineIndex, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeKind {
    Document,
    Heading,
    Paragraph,
    List,
    ListItem,
    Code,
    InlineCode,
    Link,
    Image,
    Emphasis,
    Strong,
    Delete,
    Blockquote,
    Html,
    Text,
    Table,
    TableRow,
    TableCell,
    ThematicBreak,
    Break,
    Definition,
}

impl NodeKind {
    pub const ALL: [NodeKind; 21] = [
        NodeKind::Document,
        NodeKind::Heading,
        NodeKind::Paragraph,
        NodeKind::List,
        NodeKind::ListItem,
        NodeKind::Code,
        NodeKind::InlineCode,
        NodeKind::Link,
        NodeKind::Image,
        NodeKind::Emphasis,
        NodeKind::Strong,
        NodeKind::Delete,
        NodeKind::Blockquote,
        NodeKind::Html,
        NodeKind::Text,
        NodeKind::Table,
        NodeKind::TableRow,
        NodeKind::TableCell,
        NodeKind::ThematicBreak,
        NodeKind::Break,
        NodeKind::Definition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Document => "document",
            NodeKind::Heading => "heading",
            NodeKind::Paragraph => "paragraph",
            NodeKind::List => "list",
            NodeKind::ListItem => "listItem",
            NodeKind::Code => "code",
            NodeKind::InlineCode => "inlineCode",
            NodeKind::Link => "link",
            NodeKind::Image => "image",
            NodeKind::Emphasis => "emphasis",
            NodeKind::Strong => "strong",
            NodeKind::Delete => "delete",
            NodeKind::Blockquote => "blockquote",
            NodeKind::Html => "html",
            NodeKind::Text => "text",
            NodeKind::Table => "table",
            NodeKind::TableRow => "tableRow",
            NodeKind::TableCell => "tableCell",
            NodeKind::ThematicBreak => "thematicBreak",
            NodeKind::Break => "break",
            NodeKind::Definition => "definition",
        }
    }

    /// Leaf kinds carry their literal content in the `value` attribute.
    pub fn is_literal(self) -> bool {
        matches!(
            self,
            NodeKind::Text | NodeKind::InlineCode | NodeKind::Code | NodeKind::Html
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AstNode {
    pub kind: NodeKind,
    pub span: SourceSpan,
    /// Byte offsets into the source text.
    #[serde(skip)]
    pub range: Range<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AstNode>,
}

impl AstNode {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }

    /// Heading depth (1..=6) for headings, nesting level for list items.
    pub fn depth(&self) -> Option<u8> {
        self.attr("depth").and_then(|d| d.parse().ok())
    }

    /// Concatenated literal text of this node and its descendants.
    pub fn plain_text(&self) -> String {
        let mut out = String::new();
        self.collect_text(&mut out);
        out
    }

    fn collect_text(&self, out: &mut String) {
        match self.kind {
            NodeKind::Text | NodeKind::InlineCode | NodeKind::Code => {
                out.push_str(self.attr("value").unwrap_or_default())
            }
            NodeKind::Image => out.push_str(self.attr("alt").unwrap_or_default()),
            NodeKind::Break => out.push(' '),
            _ => self.children.iter().for_each(|c| c.collect_text(out)),
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Walk<'_> {
        Walk { stack: vec![self] }
    }

    pub fn descendants_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &AstNode> {
        self.walk().filter(move |n| n.kind == kind)
    }
}

pub struct Walk<'a> {
    stack: Vec<&'a AstNode>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = &'a AstNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

fn parse_options() -> markdown::ParseOptions {
    let mut options = markdown::ParseOptions::gfm();
    options.constructs.gfm_footnote_definition = false;
    options.constructs.gfm_label_start_footnote = false;
    options
}

/// Parses markdown into a positioned tree rooted at a `document` node.
///
/// Never fails: constructs the parser cannot classify degrade to text or html.
pub fn parse(markdown: &str) -> AstNode {
    let index = LineIndex::new(markdown);
    let root_span = index.span(markdown, 0..markdown.len());
    let tree = match markdown::to_mdast(markdown, &parse_options()) {
        Ok(tree) => tree,
        Err(_) => {
            let mut attrs = BTreeMap::new();
            attrs.insert("value".to_string(), markdown.to_string());
            let text = AstNode {
                kind: NodeKind::Text,
                span: root_span,
                range: 0..markdown.len(),
                attrs,
                children: Vec::new(),
            };
            return AstNode {
                kind: NodeKind::Document,
                span: root_span,
                range: 0..markdown.len(),
                attrs: BTreeMap::new(),
                children: vec![text],
            };
        }
    };

    let mut definitions = HashMap::new();
    collect_definitions(&tree, &mut definitions);
    let converter = Converter {
        text: markdown,
        index: &index,
        definitions,
    };
    let mut root = converter.convert(&tree, 0).unwrap_or_else(|| AstNode {
        kind: NodeKind::Document,
        span: root_span,
        range: 0..markdown.len(),
        attrs: BTreeMap::new(),
        children: Vec::new(),
    });
    root.kind = NodeKind::Document;
    root.span = root_span;
    root.range = 0..markdown.len();
    root
}

fn collect_definitions(node: &mdast::Node, out: &mut HashMap<String, String>) {
    if let mdast::Node::Definition(def) = node {
        out.entry(def.identifier.clone()).or_insert_with(|| def.url.clone());
    }
    if let Some(children) = node.children() {
        children.iter().for_each(|c| collect_definitions(c, out));
    }
}

struct Converter<'a> {
    text: &'a str,
    index: &'a LineIndex,
    definitions: HashMap<String, String>,
}

impl Converter<'_> {
    fn convert(&self, node: &mdast::Node, list_level: usize) -> Option<AstNode> {
        use mdast::Node as N;

        let mut attrs = BTreeMap::new();
        let mut level = list_level;
        let kind = match node {
            N::Root(_) => NodeKind::Document,
            N::Heading(h) => {
                attrs.insert("depth".into(), h.depth.to_string());
                NodeKind::Heading
            }
            N::Paragraph(_) => NodeKind::Paragraph,
            N::List(l) => {
                attrs.insert("ordered".into(), l.ordered.to_string());
                level += 1;
                NodeKind::List
            }
            N::ListItem(item) => {
                attrs.insert("depth".into(), list_level.to_string());
                if let Some(checked) = item.checked {
                    attrs.insert("checked".into(), checked.to_string());
                }
                NodeKind::ListItem
            }
            N::Code(c) => {
                attrs.insert("value".into(), c.value.clone());
                attrs.insert("lang".into(), c.lang.clone().unwrap_or_default());
                NodeKind::Code
            }
            N::InlineCode(c) => {
                attrs.insert("value".into(), c.value.clone());
                NodeKind::InlineCode
            }
            N::Link(l) => {
                attrs.insert("url".into(), l.url.clone());
                if let Some(title) = &l.title {
                    attrs.insert("title".into(), title.clone());
                }
                NodeKind::Link
            }
            N::LinkReference(r) => {
                let url = self.definitions.get(&r.identifier).cloned().unwrap_or_default();
                attrs.insert("url".into(), url);
                NodeKind::Link
            }
            N::Image(i) => {
                attrs.insert("url".into(), i.url.clone());
                attrs.insert("alt".into(), i.alt.clone());
                NodeKind::Image
            }
            N::ImageReference(r) => {
                let url = self.definitions.get(&r.identifier).cloned().unwrap_or_default();
                attrs.insert("url".into(), url);
                attrs.insert("alt".into(), r.alt.clone());
                NodeKind::Image
            }
            N::Emphasis(_) => NodeKind::Emphasis,
            N::Strong(_) => NodeKind::Strong,
            N::Delete(_) => NodeKind::Delete,
            N::Blockquote(_) => NodeKind::Blockquote,
            N::Html(h) => {
                attrs.insert("value".into(), h.value.clone());
                NodeKind::Html
            }
            N::Text(t) => {
                attrs.insert("value".into(), t.value.clone());
                NodeKind::Text
            }
            N::Table(_) => NodeKind::Table,
            N::TableRow(_) => NodeKind::TableRow,
            N::TableCell(_) => NodeKind::TableCell,
            N::ThematicBreak(_) => NodeKind::ThematicBreak,
            N::Break(_) => NodeKind::Break,
            N::Definition(d) => {
                attrs.insert("url".into(), d.url.clone());
                attrs.insert("label".into(), d.label.clone().unwrap_or_default());
                NodeKind::Definition
            }
            other => {
                // Anything outside the supported syntax is kept as raw html.
                let position = other.position()?;
                let range = position.start.offset..position.end.offset;
                attrs.insert("value".into(), self.text[range.clone()].to_string());
                return Some(AstNode {
                    kind: NodeKind::Html,
                    span: self.index.span(self.text, range.clone()),
                    range,
                    attrs,
                    children: Vec::new(),
                });
            }
        };

        let position = node.position()?;
        let mut range = position.start.offset..position.end.offset;
        if matches!(kind, NodeKind::List | NodeKind::ListItem) {
            // Lists can absorb the line ending that precedes a blank line.
            let trimmed = self.text[range.clone()].trim_end_matches(['\n', '\r']).len();
            range.end = range.start + trimmed;
        }
        let children = node
            .children()
            .map(|cs| cs.iter().filter_map(|c| self.convert(c, level)).collect())
            .unwrap_or_default();
        Some(AstNode {
            kind,
            span: self.index.span(self.text, range.clone()),
            range,
            attrs,
            children,
        })
    }
}
