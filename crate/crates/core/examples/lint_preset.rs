//! Lint a README with a shipped preset and print each finding.
//!
//! cargo run --example lint_preset

use pipelint::corpus::RuleCorpus;
use pipelint::engine::Environment;
use pipelint::llm::{Provider, StubTable};
use pipelint::net::OfflineTransport;
use pipelint::{run_rules, Outcome};
use std::sync::Arc;

const README: &str = "# fastgrid 🚀🚀\n\nA grid library.\n\n```\nmake\n```\n\n![](logo.png)\n";

fn main() {
    let corpus = RuleCorpus::builtin();
    let (rules, unknown) = corpus.select_preset("software-library").expect("preset ships with the crate");
    assert!(unknown.is_empty());

    // LLM rules get a canned **PASS** so the example runs offline.
    let env = Environment::new(Provider::stub(StubTable::with_default("**PASS**")), Arc::new(OfflineTransport));
    for r in run_rules(&rules, README, &env) {
        match r.outcome {
            Outcome::Fail => {
                for d in &r.diagnostics {
                    println!("{}:{} {} {}", d.span.start_line, d.span.start_column, r.rule_name, d.message);
                }
            }
            Outcome::Pass => {}
            other => println!("-- {} {}: {}", r.rule_name, other.as_str(), r.reason.unwrap_or_default()),
        }
    }
}
