//! Check links against a local fixture server. Network access must be
//! allowed explicitly.
//!
//! cargo run --example link_check

use std::sync::Arc;

use pipelint::engine::{Environment, Policy};
use pipelint::llm::Provider;
use pipelint::net::UreqTransport;
use pipelint::testing::FixtureServer;
use pipelint::{parse_rule, run_rule};

fn main() {
    let server = FixtureServer::standard();
    let doc = format!(
        "# Links\n\n- [home]({})\n- [old]({})\n- [gone]({})\n- [broken]({})\n",
        server.url("/ok"),
        server.url("/moved"),
        server.url("/missing"),
        server.url("/error"),
    );
    let rule = parse_rule("rule: links\ndescription: d\npipeline:\n  - operator: isLinkAlive\n    timeout: 2000\n").unwrap();

    let offline = Environment::hermetic();
    println!("without --allow-net: {}", run_rule(&rule, &doc, &offline).outcome.as_str());

    let env = Environment::new(Provider::stub(Default::default()), Arc::new(UreqTransport)).with_policy(Policy {
        allow_net: true,
        ..Policy::default()
    });
    for d in run_rule(&rule, &doc, &env).diagnostics {
        println!("line {}: {}", d.span.start_line, d.message);
    }
}
