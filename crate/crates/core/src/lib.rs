//! A markdown linter whose rules are YAML pipelines of composable operators.
//!
//! Rules mix programmatic checks (extract, count, threshold, regexMatch, ...)
//! with LLM-backed evaluation and fixing. See the `examples/` directory for
//! one runnable program per capability.

pub mod cli;
pub mod corpus;
pub mod dsl;
pub mod engine;
pub mod llm;
pub mod md;
pub mod naming;
pub mod net;
pub mod ops;
pub mod testing;

pub use dsl::{parse_rule, Preset, Rule, Severity};
pub use engine::{run_rule, run_rules, Environment, Outcome, Policy, Report, RuleResult};
pub use md::{AstNode, Document, IgnoreMap, NodeKind, Scope, ScopeSegment, SourceSpan};
pub use naming::canonical_rule_name;
