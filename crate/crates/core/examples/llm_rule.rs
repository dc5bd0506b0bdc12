//! An LLM-backed rule, answered by a stub table and then replayed from a
//! recording. No network is used.
//!
//! cargo run --example llm_rule

use std::sync::Arc;

use pipelint::corpus::RuleCorpus;
use pipelint::engine::Environment;
use pipelint::llm::{write_exchange, Provider, StubTable};
use pipelint::net::OfflineTransport;
use pipelint::run_rule;

const README: &str = "# Blaze\n\nThe most INCREDIBLE framework ever made!!!\n";

fn main() {
    let rule = RuleCorpus::builtin().rule("ensure-neutral-tone").unwrap();

    // The first stub entry whose `contains` occurs in the prompt wins.
    let table = StubTable::with_default("**PASS**").when(
        "INCREDIBLE",
        "**FAIL**\nLine(s): 3\nIssue: marketing language\nSuggestion: describe what it does",
    );
    let env = Environment::new(Provider::stub(table), Arc::new(OfflineTransport));
    let r = run_rule(rule, README, &env);
    println!("stub: {} {:?}", r.outcome.as_str(), r.diagnostics.first().map(|d| &d.message));

    // Replay mode reads `<prompt hash>.json` files; here we write one by hand
    // for a fixed prompt pair and ask for it back.
    let dir = tempfile::tempdir().unwrap();
    write_exchange(dir.path(), "system", "user", "**PASS**", "some-model").unwrap();
    let replay = Provider::replay(dir.path());
    println!("replay: {:?}", replay.complete("system", "user", None, None));
    println!("replay miss: {:?}", replay.complete("system", "other", None, None).unwrap_err().to_string());
}
