#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pipelint::corpus::RuleCorpus;
use pipelint::engine::{Environment, Policy, RuleResult};
use pipelint::llm::{Provider, StubTable};
use pipelint::net::{CountingTransport, OfflineTransport};

pub mod checks;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn stub_env(table: StubTable) -> Environment {
    Environment::new(Provider::stub(table), Arc::new(OfflineTransport))
}

/// Stub provider answering every prompt with **PASS**, behind a transport
/// that counts connection attempts.
pub fn counted_pass_env() -> (Environment, Arc<CountingTransport>) {
    let counter = Arc::new(CountingTransport::new(Arc::new(OfflineTransport)));
    let env = Environment::new(Provider::stub(StubTable::with_default("**PASS**")), counter.clone());
    (env, counter)
}

pub fn all_allowed() -> Policy {
    Policy {
        allow_net: true,
        allow_exec: true,
        allow_scripts: true,
    }
}

/// Distinct diagnostic lines of a result, ascending.
pub fn lines(result: &RuleResult) -> Vec<usize> {
    let mut l: Vec<usize> = result.diagnostics.iter().map(|d| d.span.start_line).collect();
    l.sort_unstable();
    l.dedup();
    l
}

pub type AnswerKey = BTreeMap<String, BTreeMap<String, Vec<usize>>>;

pub fn recipe_key() -> AnswerKey {
    serde_yaml::from_str(&read_fixture("recipes/answer_key.yaml")).unwrap()
}

/// Disagreements between the recipe preset and the answer key, plus rules
/// that failed to produce a verdict.
pub fn recipe_disagreements() -> (usize, Vec<String>) {
    let corpus = RuleCorpus::builtin();
    let (rules, errors) = corpus.select_preset("recipe-rules").unwrap();
    assert!(errors.is_empty(), "{errors:?}");
    let env = stub_env(StubTable::with_default("**PASS**"));
    let mut problems = Vec::new();
    let key = recipe_key();
    for (file, expected) in &key {
        let md = read_fixture(&format!("recipes/{file}"));
        let results = pipelint::run_rules(&rules, &md, &env);
        assert_eq!(results.len(), 12);
        for r in &results {
            if !matches!(r.outcome, pipelint::Outcome::Pass | pipelint::Outcome::Fail) {
                problems.push(format!("{file}: {} was {} ({:?})", r.rule_name, r.outcome.as_str(), r.reason));
            }
            let is_llm = rules
                .iter()
                .find(|x| x.key() == r.rule_name)
                .is_some_and(|x| x.pipeline.iter().any(|s| s.operator == "evaluateUsingLLM"));
            if is_llm && r.outcome != pipelint::Outcome::Pass {
                problems.push(format!("{file}: LLM rule {} did not pass under the stub", r.rule_name));
            }
        }
        for (rule, want) in expected {
            let got = results.iter().find(|r| &r.rule_name == rule).map(lines).unwrap_or_default();
            if &got != want {
                problems.push(format!("{file}: {rule} flagged {got:?}, key says {want:?}"));
            }
        }
    }
    (key.len(), problems)
}
