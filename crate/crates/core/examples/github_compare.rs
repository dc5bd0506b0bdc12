//! Fetch a README from a (local, fake) GitHub API and compare it with the
//! document being linted.
//!
//! cargo run --example github_compare

use std::sync::Arc;

use pipelint::engine::{Environment, Policy};
use pipelint::llm::Provider;
use pipelint::net::UreqTransport;
use pipelint::testing::FixtureServer;
use pipelint::{parse_rule, run_rule};

const RULE: &str = "
rule: stay-close-to-upstream
description: d
pipeline:
  - operator: fetchFromGithub
    repo: octo/demo
    branch: main
    fileName: README.md
  - operator: compare
    baseline: 0
    against: document
    comparison_mode: similarity
    similarity_method: token_set
    threshold: 0.8
";

fn main() {
    let upstream = "# Demo\n\nParses demo files quickly and safely.\n";
    let server = FixtureServer::github(upstream);
    let mut env = Environment::new(Provider::stub(Default::default()), Arc::new(UreqTransport)).with_policy(Policy {
        allow_net: true,
        ..Policy::default()
    });
    env.github_api_base = server.base_url();

    let rule = parse_rule(RULE).unwrap();
    for doc in [upstream, "# Demo\n\nParses demo files quickly and safely. Now with plugins.\n", "# Something else\n"] {
        let r = run_rule(&rule, doc, &env);
        println!("{} {:?}", r.outcome.as_str(), r.diagnostics.first().map(|d| &d.message));
    }
}
