//! Silence a rule on one line, or everywhere.
//!
//! cargo run --example ignore_directives

use pipelint::corpus::RuleCorpus;
use pipelint::engine::Environment;
use pipelint::run_rules;

const DOC: &str = "# Release notes\n\nShipped 🎉🎉\n\nAlso shipped 🚀🚀 <ignore-line-for:enforce-emoji-limit/>\n";

fn main() {
    let rules = vec![RuleCorpus::builtin().rule("enforce-emoji-limit").unwrap().clone()];

    let r = &run_rules(&rules, DOC, &Environment::hermetic())[0];
    let lines: Vec<_> = r.diagnostics.iter().map(|d| d.span.start_line).collect();
    println!("line directive: {} on lines {lines:?}; notes {:?}", r.outcome.as_str(), r.notes);

    let env = Environment::hermetic().ignoring("enforce-emoji-limit");
    let r = &run_rules(&rules, DOC, &env)[0];
    println!("global ignore: {} ({})", r.outcome.as_str(), r.reason.as_deref().unwrap_or(""));
}
