//! Ask for a fix to one diagnostic and print it as a unified diff. The
//! document itself is never modified.
//!
//! cargo run --example fix_patch

use std::sync::Arc;

use pipelint::cli::fix::{propose_fix, unified_patch};
use pipelint::corpus::RuleCorpus;
use pipelint::engine::Environment;
use pipelint::llm::{Provider, StubTable};
use pipelint::net::OfflineTransport;
use pipelint::run_rule;

const README: &str = "# Demo\n\n![](screenshot.png)\n";

fn main() {
    let rule = RuleCorpus::builtin().rule("require-alt-text-for-images").unwrap();
    let table = StubTable::default().when(
        "FIXED MARKDOWN BELOW",
        "---FIXED MARKDOWN BELOW---\n# Demo\n\n![Main window of the demo](screenshot.png)\n",
    );
    let env = Environment::new(Provider::stub(table), Arc::new(OfflineTransport));

    let result = run_rule(rule, README, &env);
    let diagnostic = &result.diagnostics[0];
    println!("{}: {}", diagnostic.span.start_line, diagnostic.message);
    let fixed = propose_fix(rule, diagnostic, README, &env).unwrap();
    print!("{}", unified_patch("README.md", README, &fixed));
}
