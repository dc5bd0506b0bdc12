//! Shell commands and JavaScript checks only run when the policy allows it.
//!
//! cargo run --example sandboxed_checks

use pipelint::engine::{Environment, Policy};
use pipelint::{parse_rule, run_rule};

const DOC: &str = "# Setup\n\nRun `true`, then `ls /definitely/not/here`.\n\nThis sentence is short.\n";

const COMMANDS: &str = "rule: commands\ndescription: d\npipeline:\n  - operator: extract\n    target: inlineCode\n  - operator: execute\n    timeout: 2000\n";

const SCRIPT: &str = r#"
rule: few-lines
description: d
pipeline:
  - operator: customCode
    code: |
      const n = markdown.split("\n").filter(l => l.trim()).length;
      return n <= 2 ? true : [{ message: n + " non-blank lines", line: 1 }];
"#;

fn main() {
    let commands = parse_rule(COMMANDS).unwrap();
    let script = parse_rule(SCRIPT).unwrap();

    let locked = Environment::hermetic();
    println!("default policy: execute {}, customCode {}",
        run_rule(&commands, DOC, &locked).outcome.as_str(),
        run_rule(&script, DOC, &locked).outcome.as_str());

    let open = Environment::hermetic().with_policy(Policy {
        allow_exec: true,
        allow_scripts: true,
        ..Policy::default()
    });
    for r in [run_rule(&commands, DOC, &open), run_rule(&script, DOC, &open)] {
        for d in &r.diagnostics {
            println!("{} line {}: {}", r.rule_name, d.span.start_line, d.message);
        }
    }
}
