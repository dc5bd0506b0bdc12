//! Write a rule in YAML, then run it.
//!
//! cargo run --example yaml_rule

use pipelint::engine::Environment;
use pipelint::{parse_rule, run_rule};

const RULE: &str = r#"
rule: two-headings
description: Each document needs at least two headings.
severity: warning
pipeline:
  - operator: extract
    target: heading
  - operator: count
  - operator: threshold
    conditions:
      - scope: document
        comparator: greaterthanorequal
        limit: 2
        message: Found {value} heading(s), expected at least {limit}
"#;

fn main() {
    let rule = parse_rule(RULE).unwrap_or_else(|violations| {
        for v in violations {
            eprintln!("{v}");
        }
        std::process::exit(1);
    });
    let env = Environment::hermetic();
    for doc in ["# Only one\n\ntext\n", "# One\n\n## Two\n"] {
        let r = run_rule(&rule, doc, &env);
        println!("{:?} -> {} {:?}", doc, r.outcome.as_str(), r.diagnostics.iter().map(|d| &d.message).collect::<Vec<_>>());
    }

    // A typo in an operator name is caught with a suggestion.
    let err = parse_rule("rule: x\ndescription: d\npipeline:\n  - operator: extrct\n").unwrap_err();
    println!("{}", err[0]);
}
