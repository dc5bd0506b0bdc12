//! Print what every step of a pipeline produced.
//!
//! cargo run --example trace_pipeline

use pipelint::engine::{trace_rule, Environment};
use pipelint::ops::Catalog;
use pipelint::{parse_rule, Document};

fn main() {
    let rule = parse_rule(
        "rule: emoji\ndescription: d\npipeline:\n  - operator: extract\n    target: emoji\n    scopes: [document, line]\n  - operator: count\n  - operator: threshold\n    conditions:\n      - scope: line\n        comparator: lessthan\n        limit: 2\n",
    )
    .unwrap();
    let doc = Document::new("# Party\n\n🎉 one\n🎉🎉 two\n");
    let (result, outputs) = trace_rule(&rule, &doc, &Environment::hermetic(), Catalog::builtin());
    for (i, value) in outputs.iter().enumerate() {
        println!("--- step {i} ({})\n{}", value.kind(), value.to_yaml_truncated(600));
    }
    println!("=> {}", result.outcome.as_str());
}
