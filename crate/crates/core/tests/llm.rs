mod common;

use std::sync::Arc;

use pipelint::dsl::export_catalog;
use pipelint::engine::{Environment, Outcome, Policy};
use pipelint::llm::{
    fix_document, generate_rule, prompt_hash, ConfigError, FlowError, LlmConfig, LlmError, Mode, Provider, StubTable,
};
use pipelint::net::{CountingTransport, OfflineTransport, UreqTransport};
use pipelint::ops::Catalog;
use pipelint::testing::{FixtureServer, Route};
use pipelint::{parse_rule, run_rule};

const CHAT: &str = "/v1/chat/completions";

/// Each test names its own key variable so parallel tests do not race.
fn live_config(server: &FixtureServer, key_var: &str, extra: &str) -> LlmConfig {
    LlmConfig::parse(&format!(
        "[provider]\nmode = \"live\"\nendpoint_url = \"{}\"\nmodel = \"m1\"\ntemperature = 0.2\ntimeout_ms = 3000\napi_key_env = \"{key_var}\"\n{extra}",
        server.url(CHAT)
    ))
    .unwrap()
}

fn reply(text: &str) -> Route {
    Route::json(200, &serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}))
}

fn live(server: &FixtureServer, key_var: &str) -> Provider {
    Provider::live(live_config(server, key_var, ""), Arc::new(UreqTransport), None)
}

#[test]
fn live_request_shape() {
    let server = FixtureServer::start(vec![(CHAT, reply("hello"))]);
    std::env::set_var("PIPELINT_TEST_KEY_SHAPE", "sk-shape");
    let text = live(&server, "PIPELINT_TEST_KEY_SHAPE").complete("sys", "usr", None, None).unwrap();
    assert_eq!(text, "hello");
    let seen = &server.requests()[0];
    assert_eq!(seen.method, "POST");
    assert!(seen.headers.iter().any(|(k, v)| k.eq_ignore_ascii_case("authorization") && v == "Bearer sk-shape"));
    let body: serde_json::Value = serde_json::from_str(&seen.body).unwrap();
    assert_eq!(body["model"], "m1");
    assert_eq!(body["temperature"], 0.2);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], "sys");
    assert_eq!(body["messages"][1]["content"], "usr");
}

#[test]
fn temperature_is_left_out_for_models_that_reject_it() {
    let server = FixtureServer::start(vec![(CHAT, reply("ok"))]);
    std::env::set_var("PIPELINT_TEST_KEY_TEMP", "k");
    let config = live_config(&server, "PIPELINT_TEST_KEY_TEMP", "[[models]]\nid = \"m2\"\nsupports_temperature = false\n");
    let p = Provider::live(config, Arc::new(UreqTransport), None);
    p.complete("s", "u", Some("m2"), None).unwrap();
    let body: serde_json::Value = serde_json::from_str(&server.requests()[0].body).unwrap();
    assert_eq!(body["model"], "m2");
    assert!(body.get("temperature").is_none());
}

#[test]
fn missing_key_fails_before_any_request() {
    let server = FixtureServer::start(vec![(CHAT, reply("x"))]);
    std::env::remove_var("PIPELINT_TEST_KEY_UNSET");
    let err = live(&server, "PIPELINT_TEST_KEY_UNSET").complete("s", "u", None, None).unwrap_err();
    assert!(matches!(err, LlmError::Auth(ref m) if m.contains("PIPELINT_TEST_KEY_UNSET")), "{err}");
    assert_eq!(server.hits(), 0);
}

#[test]
fn http_failures_are_classified() {
    let server = FixtureServer::start(vec![
        ("/denied", Route::new(401, "no")),
        ("/busy", Route::new(429, "later")),
        ("/broken", Route::new(503, "down")),
        ("/garbage", Route::new(200, "not json")),
        ("/empty", Route::json(200, &serde_json::json!({"choices": []}))),
    ]);
    std::env::set_var("PIPELINT_TEST_KEY_HTTP", "k");
    let call = |path: &str| {
        let mut config = live_config(&server, "PIPELINT_TEST_KEY_HTTP", "");
        config.provider.endpoint_url = server.url(path);
        Provider::live(config, Arc::new(UreqTransport), None).complete("s", "u", None, None).unwrap_err()
    };
    assert!(matches!(call("/denied"), LlmError::Auth(_)));
    let busy = call("/busy");
    assert!(matches!(busy, LlmError::Http { status: 429, retriable: true, .. }));
    assert!(busy.is_retriable());
    assert!(call("/broken").is_retriable());
    assert!(matches!(call("/garbage"), LlmError::Format(_)));
    assert!(matches!(call("/empty"), LlmError::Format(_)));
}

#[test]
fn recording_then_replay_needs_no_network() {
    let server = FixtureServer::start(vec![(CHAT, reply("**PASS**"))]);
    std::env::set_var("PIPELINT_TEST_KEY_REC", "k");
    let dir = tempfile::tempdir().unwrap();
    let recorder = Provider::live(
        live_config(&server, "PIPELINT_TEST_KEY_REC", ""),
        Arc::new(UreqTransport),
        Some(dir.path().to_path_buf()),
    );
    assert_eq!(recorder.complete("sys", "usr", None, None).unwrap(), "**PASS**");
    let file = dir.path().join(format!("{}.json", prompt_hash("sys", "usr")));
    let recorded: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(recorded["modelId"], "m1");
    assert_eq!(recorded["responseText"], "**PASS**");
    assert!(!recorded.to_string().contains("\"k\""), "key leaked into the recording");

    let replay = Provider::replay(dir.path());
    assert_eq!(replay.mode(), Mode::Replay);
    assert_eq!(replay.complete("sys", "usr", None, None).unwrap(), "**PASS**");
    assert!(matches!(replay.complete("sys", "other", None, None), Err(LlmError::ReplayMiss { .. })));
    assert_eq!(server.hits(), 1);
}

#[test]
fn config_refuses_inline_keys() {
    let err = LlmConfig::parse("[provider]\nmode = \"live\"\nendpoint_url = \"x\"\nmodel = \"m\"\ntimeout_ms = 1\napi_key_env = \"V\"\napi_key = \"sk-123\"\n")
        .unwrap_err();
    assert!(matches!(err, ConfigError::InlineKey));
    assert!(LlmConfig::parse("[provider]\nmode = \"stub\"\n").is_err());
    let defaults = LlmConfig::default();
    assert_eq!(defaults.provider.mode, Mode::Stub);
    assert_eq!(defaults.provider.api_key_env, "PIPELINT_API_KEY");
}

#[test]
fn llm_rule_maps_failed_lines_to_diagnostics() {
    let rule = pipelint::corpus::RuleCorpus::builtin().rule("ensure-neutral-tone").unwrap().clone();
    let table = StubTable::default().when(
        "neutral, credible",
        "**FAIL**\nLine(s): 3, 5\nIssue: hype words\nSuggestion: tone it down",
    );
    let md = "# Tool\n\nThe BEST tool ever!!!\n\nTruly revolutionary.\n";
    let r = run_rule(&rule, md, &common::stub_env(table));
    assert_eq!(r.outcome, Outcome::Fail);
    assert_eq!(common::lines(&r), vec![3, 5]);
    assert!(r.diagnostics[0].message.contains("hype words"));
    assert!(r.fixable);
}

#[test]
fn stub_without_an_answer_skips_the_rule() {
    let rule = pipelint::corpus::RuleCorpus::builtin().rule("ensure-neutral-tone").unwrap().clone();
    let r = run_rule(&rule, "# x\n", &Environment::hermetic());
    assert_eq!(r.outcome, Outcome::Skipped);
    assert!(r.reason.unwrap().contains("no LLM configured"));
}

#[test]
fn prose_instead_of_a_verdict_is_an_error() {
    let rule = pipelint::corpus::RuleCorpus::builtin().rule("ensure-neutral-tone").unwrap().clone();
    let r = run_rule(&rule, "# x\n", &common::stub_env(StubTable::with_default("Looks fine to me.")));
    assert_eq!(r.outcome, Outcome::Errored);
}

#[test]
fn live_mode_without_net_makes_no_requests() {
    let server = FixtureServer::start(vec![(CHAT, reply("**PASS**"))]);
    std::env::set_var("PIPELINT_TEST_KEY_NONET", "k");
    let counter = Arc::new(CountingTransport::new(Arc::new(OfflineTransport)));
    let provider = Provider::live(live_config(&server, "PIPELINT_TEST_KEY_NONET", ""), counter.clone(), None);
    let env = Environment::new(provider, counter.clone()).with_policy(Policy::default());
    let rule = pipelint::corpus::RuleCorpus::builtin().rule("ensure-neutral-tone").unwrap().clone();
    let r = run_rule(&rule, "# x\n", &env);
    assert_eq!(r.outcome, Outcome::Skipped, "{:?}", r.reason);
    assert_eq!(counter.count(), 0);
    assert_eq!(server.hits(), 0);
}

#[test]
fn generated_rules_are_validated() {
    let catalog = Catalog::builtin().schemas();
    let good = "```yaml\nrule: two-headings\ndescription: Each markdown must have 2 headings.\npipeline:\n  - operator: extract\n    target: heading\n  - operator: count\n  - operator: threshold\n    conditions:\n      - scope: document\n        comparator: equal\n        limit: 2\n```";
    let p = Provider::stub(StubTable::with_default(good));
    let generated = generate_rule(&p, "each markdown must have 2 headings", catalog, None).unwrap();
    assert_eq!(generated.rule.name, "two-headings");
    assert!(!generated.yaml.contains("```"));
    assert_eq!(run_rule(&generated.rule, "# a\n\n## b\n", &Environment::hermetic()).outcome, Outcome::Pass);

    let bad = Provider::stub(StubTable::with_default("rule: x\ndescription: d\npipeline:\n  - operator: nope\n"));
    match generate_rule(&bad, "idea", catalog, None) {
        Err(FlowError::Generation { violations, raw, .. }) => {
            assert!(!violations.is_empty());
            assert!(raw.contains("nope"));
        }
        other => panic!("expected a generation error, got {other:?}"),
    }
    assert!(export_catalog(catalog).to_string().contains("isLinkAlive"));
}

#[test]
fn fix_requires_the_marker() {
    let rule = parse_rule("rule: r\ndescription: d\npipeline:\n  - operator: regexMatch\n    patterns: [TODO]\n").unwrap();
    let ok = Provider::stub(StubTable::with_default("Sure.\n---FIXED MARKDOWN BELOW---\n# Fixed\n"));
    assert_eq!(fix_document(&ok, &rule, &[], "# TODO\n", "remove todos", None).unwrap(), "# Fixed\n");
    let no = Provider::stub(StubTable::with_default("# Fixed\n"));
    assert!(matches!(
        fix_document(&no, &rule, &[], "# TODO\n", "remove todos", None),
        Err(FlowError::MissingMarker { .. })
    ));
}
