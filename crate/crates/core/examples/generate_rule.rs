//! Draft a rule from a one-line idea. The stub stands in for the model; the
//! answer is validated against the operator catalog before it is returned.
//!
//! cargo run --example generate_rule

use pipelint::engine::Environment;
use pipelint::llm::{generate_rule, prompts, FlowError, Provider, StubTable};
use pipelint::ops::Catalog;
use pipelint::run_rule;

const ANSWER: &str = "```yaml
rule: two-headings
description: Each markdown must have 2 headings.
pipeline:
  - operator: extract
    target: heading
  - operator: count
  - operator: threshold
    conditions:
      - scope: document
        comparator: equal
        limit: 2
```";

fn main() {
    let idea = "each markdown must have 2 headings";
    println!("user prompt:\n{}\n", prompts::generate_user(idea));

    let provider = Provider::stub(StubTable::with_default(ANSWER));
    let generated = generate_rule(&provider, idea, Catalog::builtin().schemas(), None).unwrap();
    println!("{}", generated.yaml);
    let r = run_rule(&generated.rule, "# a\n\n## b\n", &Environment::hermetic());
    println!("on a two-heading doc: {}", r.outcome.as_str());

    let broken = Provider::stub(StubTable::with_default("rule: x\ndescription: d\npipeline:\n  - operator: countt\n"));
    if let Err(FlowError::Generation { message, .. }) = generate_rule(&broken, idea, Catalog::builtin().schemas(), None) {
        println!("rejected: {message}");
    }
}
