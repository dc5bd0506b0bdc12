mod common;

use std::time::Duration;

use pipelint::cli::server::{spawn_background, AppState, ServerHandle};
use pipelint::corpus::RuleCorpus;
use pipelint::dsl::export_catalog;
use pipelint::llm::StubTable;
use pipelint::net::{HttpRequest, Transport, UreqTransport};
use pipelint::ops::Catalog;
use serde_json::{json, Value};

use common::checks::post_json;

const EMOJI_DOC: &str = "# Demo\n\nParty 🎉🎉 time\n";

fn server(table: StubTable) -> ServerHandle {
    let state = AppState::new(RuleCorpus::builtin().clone(), common::stub_env(table));
    spawn_background("127.0.0.1:0".parse().unwrap(), state).unwrap()
}

fn get_json(url: &str) -> (u16, Value) {
    let resp = UreqTransport.send(&HttpRequest::get(url, Duration::from_secs(10))).unwrap();
    (resp.status, serde_json::from_slice(&resp.body).unwrap())
}

fn fixing_stub() -> StubTable {
    StubTable::with_default("**PASS**").when("FIXED MARKDOWN BELOW", "---FIXED MARKDOWN BELOW---\n# Demo\n\nParty 🎉 time\n")
}

#[test]
fn lint_with_rule_names_and_inline_yaml() {
    let s = server(StubTable::with_default("**PASS**"));
    let inline = "rule: no-party\ndescription: d\npipeline:\n  - operator: regexMatch\n    patterns: [Party]\n";
    let (status, report) = post_json(
        &s.url("/api/lint"),
        &json!({"markdown": EMOJI_DOC, "rules": ["enforce-emoji-limit", inline], "documentPath": "demo.md"}),
    );
    assert_eq!(status, 200);
    assert_eq!(report["documentPath"], "demo.md");
    let results = report["ruleResults"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r["outcome"] == "fail"));
    assert_eq!(results[0]["diagnostics"][0]["span"]["startLine"], 3);
}

#[test]
fn lint_request_errors() {
    let s = server(StubTable::default());
    let (status, body) = post_json(&s.url("/api/lint"), &json!({"markdown": "x", "preset": "nope"}));
    assert_eq!(status, 400);
    assert_eq!(body["error"]["code"], "unknown_preset");
    let (status, _) = post_json(
        &s.url("/api/lint"),
        &json!({"markdown": "x", "preset": "software-library", "rules": ["enforce-emoji-limit"]}),
    );
    assert_eq!(status, 400);
    let (status, body) = post_json(&s.url("/api/lint"), &json!({"text": "x"}));
    assert_eq!(status, 400);
    assert_eq!(body["error"]["code"], "bad_request");

    let (status, report) = post_json(&s.url("/api/lint"), &json!({"markdown": "x", "rules": ["no-such-rule"]}));
    assert_eq!(status, 200);
    assert!(report["configErrors"].to_string().contains("no-such-rule"));
}

#[test]
fn generate_in_stub_mode() {
    let yaml = "rule: two-headings\ndescription: d\npipeline:\n  - operator: extract\n    target: heading\n  - operator: count\n  - operator: threshold\n    conditions:\n      - scope: document\n        comparator: equal\n        limit: 2\n";
    let s = server(StubTable::with_default(yaml));
    let (status, body) = post_json(&s.url("/api/rules/generate"), &json!({"idea": "each markdown must have 2 headings"}));
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["rule"]["rule"], "two-headings");
    assert_eq!(body["yaml"], yaml);

    let bad = server(StubTable::with_default("not: a rule"));
    let (status, body) = post_json(&bad.url("/api/rules/generate"), &json!({"idea": "x"}));
    assert_eq!(status, 422);
    assert_eq!(body["error"]["code"], "invalid_generated_rule");
    assert!(!body["error"]["violations"].as_array().unwrap().is_empty());

    let (status, _) = post_json(&bad.url("/api/rules/generate"), &json!({"idea": "  "}));
    assert_eq!(status, 400);
}

#[test]
fn validate_endpoint() {
    let s = server(StubTable::default());
    let (_, ok) = post_json(
        &s.url("/api/rules/validate"),
        &json!({"yaml": "rule: a\ndescription: d\npipeline:\n  - operator: isLinkAlive\n"}),
    );
    assert_eq!(ok["valid"], true);
    assert_eq!(ok["rules"], json!(["a"]));
    let (_, bad) = post_json(
        &s.url("/api/rules/validate"),
        &json!({"yaml": "rule: a\ndescription: d\npipeline:\n  - operator: isLinkAlive\n    timeout: soon\n"}),
    );
    assert_eq!(bad["valid"], false);
    assert_eq!(bad["violations"][0]["path"], "$.pipeline[0].timeout");
}

#[test]
fn fix_endpoint() {
    let s = server(fixing_stub());
    for id in [json!(0), json!("enforce-emoji-limit#0")] {
        let (status, body) = post_json(
            &s.url("/api/fix"),
            &json!({"markdown": EMOJI_DOC, "ruleName": "enforce-emoji-limit", "diagnosticId": id}),
        );
        assert_eq!(status, 200, "{body}");
        assert_eq!(body["diagnosticId"], "enforce-emoji-limit#0");
        assert_eq!(body["original"], EMOJI_DOC);
        assert_eq!(body["fixed"], "# Demo\n\nParty 🎉 time\n");
        let patch = body["patch"].as_str().unwrap();
        assert!(patch.contains("-Party 🎉🎉 time") && patch.contains("+Party 🎉 time"), "{patch}");
    }
    let call = |rule: &str, id: Value| {
        post_json(&s.url("/api/fix"), &json!({"markdown": EMOJI_DOC, "ruleName": rule, "diagnosticId": id}))
    };
    let (status, body) = call("enforce-emoji-limit", json!(5));
    assert_eq!((status, body["error"]["code"].clone()), (404, json!("unknown_diagnostic")));
    let (status, _) = call("no-such-rule", json!(0));
    assert_eq!(status, 404);
    let (status, body) = call("consistent-list-format", json!(0));
    assert_eq!(status, 404, "{body}");
}

#[test]
fn fix_of_a_rule_without_a_fix_step() {
    let s = server(fixing_stub());
    let (status, body) = post_json(
        &s.url("/api/fix"),
        &json!({"markdown": "- a\n* b\n", "ruleName": "consistent-list-format", "diagnosticId": 0}),
    );
    assert_eq!(status, 422);
    assert_eq!(body["error"]["code"], "not_fixable");
}

#[test]
fn catalog_endpoints() {
    let s = server(StubTable::default());
    let (status, ops) = get_json(&s.url("/api/operators"));
    assert_eq!(status, 200);
    assert_eq!(ops, export_catalog(Catalog::builtin().schemas()));
    let (_, presets) = get_json(&s.url("/api/presets"));
    assert_eq!(presets.as_array().unwrap().len(), 4);
    let (_, rules) = get_json(&s.url("/api/rules"));
    assert_eq!(rules.as_array().unwrap().len(), RuleCorpus::builtin().rules.len());
    assert!(rules[0]["description"].is_string());
}
