//! One function per acceptance criterion. Each returns a short detail line,
//! as `Ok` when the criterion holds.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pipelint::cli::lint::{build_environment, LlmOptions};
use pipelint::cli::server::{spawn_background, AppState};
use pipelint::corpus::RuleCorpus;
use pipelint::engine::{Environment, Outcome, Policy};
use pipelint::llm::{self, prompts, LlmConfig, Provider, StubTable};
use pipelint::net::{CountingTransport, HttpRequest, OfflineTransport, Transport, UreqTransport};
use pipelint::testing::{FixtureServer, Route};
use pipelint::{parse_rule, run_rule, run_rules, Document, Rule};

use super::{fixture, lines, read_fixture, stub_env};

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Emoji documents with known tallies.

/// Emoji as a reader sees them; multi-codepoint sequences count once.
pub const EMOJI: [&str; 10] = ["😀", "🎉", "🚀", "👍🏽", "🇫🇷", "👨‍👩‍👧", "❤️", "1️⃣", "✅", "🧪"];
/// Characters that look symbolic but are not emoji in running text.
pub const NOT_EMOJI: [&str; 6] = ["©", "™", "↔", "♥", "#1", "42"];
const WORDS: [&str; 8] = ["alpha", "beta", "gamma", "delta", "install", "build", "docs", "run"];

/// A generated document and, for each line, how many emoji were placed on
/// it and which paragraph (if any) it belongs to.
pub struct EmojiDoc {
    pub text: String,
    pub per_line: Vec<usize>,
    pub paragraph_of: Vec<Option<usize>>,
}

impl EmojiDoc {
    pub fn total(&self) -> usize {
        self.per_line.iter().sum()
    }

    pub fn per_paragraph(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for (n, p) in self.per_line.iter().zip(&self.paragraph_of) {
            if let Some(p) = p {
                *m.entry(*p).or_insert(0) += n;
            }
        }
        m
    }

    /// The three enforce-emoji-limit conditions, evaluated on the generator's own tally.
    pub fn satisfies_emoji_limit(&self) -> bool {
        self.total() < 20 && self.per_paragraph().values().all(|&n| n < 4) && self.per_line.iter().all(|&n| n < 2)
    }
}

fn emoji_line(rng: &mut ChaCha8Rng, emoji: usize) -> String {
    let mut tokens: Vec<String> = (0..rng.gen_range(2..7)).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    for _ in 0..emoji {
        tokens.push(EMOJI.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.4) {
        tokens.push(NOT_EMOJI.choose(rng).unwrap().to_string());
    }
    tokens.shuffle(rng);
    // The first token must not look like a block marker.
    tokens.insert(0, WORDS.choose(rng).unwrap().to_string());
    tokens.join(" ")
}

/// Modes stress one condition each: sparse lines, a crowded paragraph, a
/// long document of single-emoji lines, or a doubled line.
pub fn emoji_doc(rng: &mut ChaCha8Rng) -> EmojiDoc {
    let mode = rng.gen_range(0..4);
    let paragraphs = if mode == 2 { rng.gen_range(6..9) } else { rng.gen_range(1..5) };
    let mut lines: Vec<(String, usize, Option<usize>)> = Vec::new();
    if rng.gen_bool(0.5) {
        let n = usize::from(rng.gen_bool(0.3));
        let mut title = format!("# {}", WORDS.choose(rng).unwrap());
        for _ in 0..n {
            title.push(' ');
            title.push_str(EMOJI.choose(rng).unwrap());
        }
        lines.push((title, n, None));
        lines.push((String::new(), 0, None));
    }
    for p in 0..paragraphs {
        let count = rng.gen_range(1..4);
        for _ in 0..count {
            let emoji = match mode {
                0 => usize::from(rng.gen_bool(0.3)),
                1 => usize::from(rng.gen_bool(0.7)),
                2 => 1,
                _ => [0, 0, 1, 2].choose(rng).copied().unwrap(),
            };
            lines.push((emoji_line(rng, emoji), emoji, Some(p)));
        }
        lines.push((String::new(), 0, None));
    }
    let text = lines.iter().map(|l| l.0.as_str()).collect::<Vec<_>>().join("\n");
    EmojiDoc {
        text,
        per_line: lines.iter().map(|l| l.1).collect(),
        paragraph_of: lines.iter().map(|l| l.2).collect(),
    }
}

/// enforce-emoji-limit vs the generator's tally on 200 documents.
pub fn emoji_limit_fidelity() -> Check {
    let started = Instant::now();
    let rule = RuleCorpus::builtin().rule("enforce-emoji-limit").ok_or("rule missing")?.clone();
    let env = Environment::hermetic();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut disagreements, mut passes) = (0, 0);
    let mut first = None;
    for i in 0..200 {
        let doc = emoji_doc(&mut rng);
        let result = run_rule(&rule, &doc.text, &env);
        let expected = doc.satisfies_emoji_limit();
        passes += usize::from(expected);
        let agrees = match result.outcome {
            Outcome::Pass => expected,
            Outcome::Fail => !expected,
            _ => false,
        };
        if !agrees {
            disagreements += 1;
            first.get_or_insert_with(|| format!("doc {i}: engine {:?}, oracle pass={expected}\n{}", result.outcome, doc.text));
        }
    }
    let elapsed = started.elapsed();
    ensure(disagreements == 0, || format!("{disagreements} disagreements; first: {}", first.unwrap_or_default()))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    ensure((20..=180).contains(&passes), || format!("degenerate corpus: {passes}/200 pass"))?;
    Ok(format!("200 docs, 0 disagreements ({passes} pass / {} fail), {elapsed:.2?}", 200 - passes))
}

// ---------------------------------------------------------------------------

fn rule(yaml: &str) -> Rule {
    parse_rule(yaml).unwrap_or_else(|v| panic!("{v:?}"))
}

pub fn ladder_halts() -> Check {
    let r = run_rule(&rule("rule: count-first\ndescription: d\npipeline:\n  - operator: count\n"), "a 🎉", &Environment::hermetic());
    ensure(r.outcome == Outcome::Halted, || format!("count-first gave {:?}", r.outcome))?;
    ensure(r.diagnostics.is_empty(), || "halted rule carried diagnostics".into())?;
    Ok(format!("halted: {}", r.reason.unwrap_or_default()))
}

pub fn ladder_incomplete() -> Check {
    let r = run_rule(
        &rule("rule: extract-only\ndescription: d\npipeline:\n  - operator: extract\n    target: emoji\n"),
        "one 🎉\ntwo 🚀\n",
        &Environment::hermetic(),
    );
    ensure(r.outcome == Outcome::Incomplete, || format!("extract-only gave {:?}", r.outcome))?;
    let preview = r.preview.ok_or("no preview")?;
    ensure(preview.contains("🎉") && preview.contains("🚀"), || format!("preview lacks matches: {preview}"))?;
    ensure(preview.len() <= 4096, || "preview too long".into())?;
    Ok(format!("incomplete, {}-byte preview", preview.len()))
}

const IGNORE_DOC: &str = "# Notes\n\nfirst 🎉🎉 TODO\nsecond 🚀🚀 TODO <ignore-line-for:enforce-emoji-limit/>\nthird ✅✅\n";

pub fn ladder_local_ignore() -> Check {
    let corpus = RuleCorpus::builtin();
    let emoji = corpus.rule("enforce-emoji-limit").unwrap().clone();
    let todo = rule("rule: no-todo\ndescription: d\npipeline:\n  - operator: regexMatch\n    patterns: [TODO]\n");
    let results = run_rules(&[emoji, todo], IGNORE_DOC, &Environment::hermetic());
    let by = |n: &str| results.iter().find(|r| r.rule_name == n).unwrap();
    let emoji_lines = lines(by("enforce-emoji-limit"));
    let todo_lines = lines(by("no-todo"));
    ensure(emoji_lines == vec![3, 5], || format!("emoji lines {emoji_lines:?}, want [3, 5]"))?;
    ensure(todo_lines == vec![3, 4], || format!("todo lines {todo_lines:?}, want [3, 4]"))?;
    Ok("line 4 suppressed for enforce-emoji-limit only".into())
}

pub fn ladder_global_ignore() -> Check {
    let emoji = RuleCorpus::builtin().rule("enforce-emoji-limit").unwrap().clone();
    let env = Environment::hermetic().ignoring("enforce-emoji-limit");
    let results = run_rules(&[emoji], IGNORE_DOC, &env);
    ensure(results[0].outcome == Outcome::Skipped, || format!("got {:?}", results[0].outcome))?;
    ensure(results[0].diagnostics.is_empty(), || "skipped rule kept diagnostics".into())?;
    Ok("skipped".into())
}

/// Every diagnostic of every corpus rule lands in [1, lineCount]; findings
/// without a position land on line 1.
pub fn ladder_localization() -> Check {
    let mut table = StubTable::default()
        .when("FIXED MARKDOWN BELOW", "---FIXED MARKDOWN BELOW---\nx")
        .when("sensitive", "**FAIL**\nIssue: no line given\nSuggestion: none");
    table.default = Some("**FAIL**\nLine(s): 0, 2, 999\nIssue: out of range\nSuggestion: clamp".into());
    let env = stub_env(table).with_policy(Policy {
        allow_scripts: true,
        ..Policy::default()
    });
    let rules: Vec<Rule> = RuleCorpus::builtin().rules.values().cloned().collect();
    let docs = ["", "one line", "# T\n\nbody 🎉🎉\n\n- a\n- b\n", &read_fixture("readmes/sample.md")];
    let mut checked = 0;
    for md in docs {
        let count = Document::new(md).line_count().max(1);
        for r in run_rules(&rules, md, &env) {
            for d in &r.diagnostics {
                checked += 1;
                ensure((1..=count).contains(&d.span.start_line), || {
                    format!("{}: line {} outside [1, {count}]", r.rule_name, d.span.start_line)
                })?;
            }
        }
    }
    // No span, no text: line 1.
    let custom = rule("rule: always-false\ndescription: d\npipeline:\n  - operator: customCode\n    code: return false;\n");
    let r = run_rule(&custom, "a\nb\nc\n", &env);
    ensure(r.diagnostics.len() == 1 && r.diagnostics[0].span.start_line == 1, || format!("{:?}", r.diagnostics))?;
    let llm_rule = rule("rule: vague\ndescription: d\npipeline:\n  - operator: evaluateUsingLLM\n    ruleDefinition: No sensitive data.\n");
    let r = run_rule(&llm_rule, "a\nb\nc\n", &env);
    ensure(r.diagnostics.len() == 1 && r.diagnostics[0].span.start_line == 1, || format!("{:?}", r.diagnostics))?;
    Ok(format!("{checked} diagnostics in range; unlocalized findings on line 1"))
}

pub fn linting_ladder() -> Check {
    let started = Instant::now();
    let parts = [
        ("a", ladder_halts()),
        ("b", ladder_incomplete()),
        ("c", ladder_local_ignore()),
        ("d", ladder_global_ignore()),
        ("e", ladder_localization()),
    ];
    let failed: Vec<String> = parts
        .iter()
        .filter_map(|(k, r)| r.as_ref().err().map(|e| format!("({k}) {e}")))
        .collect();
    let elapsed = started.elapsed();
    ensure(failed.is_empty(), || failed.join("; "))?;
    ensure(elapsed < Duration::from_secs(2), || format!("took {elapsed:?}"))?;
    Ok(format!("(a)-(e) hold, {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------

fn golden(name: &str) -> String {
    read_fixture(&format!("golden/{name}"))
}

fn slots() -> BTreeMap<String, String> {
    serde_json::from_str(&golden("slots.json")).unwrap()
}

pub fn prompt_goldens() -> Check {
    let s = slots();
    let fix = prompts::fix_system(&s["ruleYaml"], &s["prompt"], &s["diagnosticText"], &s["ctx.markdown"]);
    ensure(fix == golden("fix_system.txt"), || "fix system prompt differs from golden".into())?;
    let eval = prompts::evaluate_system(&s["ruleYaml"], &s["operatorOutputs"], &s["diagnosticText"], &s["ctx.markdown"]);
    ensure(eval == golden("evaluate_system.txt"), || "evaluate system prompt differs from golden".into())?;
    let catalog = pipelint::dsl::catalog_prompt_text(pipelint::ops::Catalog::builtin().schemas());
    let gen = prompts::generate_system(&catalog);
    let head = golden("generate_system_head.txt");
    ensure(gen == format!("{head}\n\nOPERATORS CATALOG:\n{catalog}"), || "generate system prompt differs".into())?;
    ensure(
        prompts::generate_user("each markdown must have 2 headings.") == golden("generate_user.txt"),
        || "generate user prompt differs".into(),
    )?;

    // Marker handling.
    let echo = "# Title\n\nBody.\n\n";
    let response = format!("preamble\n---FIXED MARKDOWN BELOW---\n{echo}");
    let fixed = llm::extract_fixed(&response).ok_or("marker not found")?;
    ensure(fixed == echo, || format!("extracted {fixed:?}"))?;
    let provider = Provider::stub(StubTable::with_default("no marker here"));
    let r = rule("rule: r\ndescription: d\npipeline:\n  - operator: fixUsingLLM\n    prompt: fix\n");
    let err = llm::fix_document(&provider, &r, &[], echo, "fix", None);
    ensure(matches!(err, Err(llm::FlowError::MissingMarker { .. })), || format!("{err:?}"))?;

    // Verdicts.
    let v = llm::parse_verdict("**FAIL**\nLine(s): [4, 7-9]\nIssue: jargon\nSuggestion: explain it").ok_or("FAIL not parsed")?;
    ensure(v.lines == vec![4, 7, 8, 9] && v.issue == "jargon" && v.suggestion == "explain it", || format!("{v:?}"))?;
    ensure(llm::parse_verdict("**PASS**").is_some_and(|v| v.passed()), || "PASS not parsed".into())?;
    ensure(llm::parse_verdict("Looks fine to me").is_none(), || "prose accepted as a verdict".into())?;
    Ok("3 system prompts byte-identical; marker and verdict parsing hold".into())
}

// ---------------------------------------------------------------------------

const CHAT_PATH: &str = "/v1/chat/completions";
pub const TEST_KEY_VAR: &str = "PIPELINT_TEST_ONLY_KEY";

/// Config for a live provider pointed at a loopback server.
pub fn loopback_config(server: &FixtureServer) -> LlmConfig {
    LlmConfig::parse(&format!(
        "[provider]\nmode = \"live\"\nendpoint_url = \"{}\"\nmodel = \"fixture-model\"\ntemperature = 0.0\ntimeout_ms = 5000\napi_key_env = \"{TEST_KEY_VAR}\"\n",
        server.url(CHAT_PATH)
    ))
    .unwrap()
}

pub fn chat_reply(text: &str) -> Route {
    Route::json(200, &serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] }))
}

fn full_corpus_json(env: &Environment, docs: &[(&str, String)]) -> Vec<String> {
    let corpus = RuleCorpus::builtin();
    let rules: Vec<Rule> = corpus.rules.values().cloned().collect();
    docs.iter()
        .map(|(path, md)| pipelint::cli::lint::lint(md, path, &rules, vec![], corpus, env).to_json())
        .collect()
}

fn hermetic_docs() -> Vec<(&'static str, String)> {
    vec![
        ("sample.md", read_fixture("readmes/sample.md")),
        ("clean.md", read_fixture("readmes/clean.md")),
        ("cookies.md", read_fixture("recipes/cookies.md")),
    ]
}

/// Runs the corpus twice in stub mode and twice in replay mode.
pub fn hermetic_determinism() -> Check {
    let policy = Policy {
        allow_scripts: true,
        ..Policy::default()
    };
    let docs = hermetic_docs();

    // Stub.
    let table = StubTable::with_default("**PASS**")
        .when("jargon", "**FAIL**\nLine(s): 3\nIssue: unclear\nSuggestion: explain")
        .when("FIXED MARKDOWN BELOW", "---FIXED MARKDOWN BELOW---\nfixed\n");
    let counter = Arc::new(CountingTransport::new(Arc::new(OfflineTransport)));
    let env = Environment::new(Provider::stub(table), counter.clone()).with_policy(policy);
    let a = full_corpus_json(&env, &docs);
    let b = full_corpus_json(&env, &docs);
    ensure(a == b, || "stub runs differ".into())?;
    ensure(counter.count() == 0, || format!("stub mode made {} requests", counter.count()))?;
    let total_bytes: usize = a.iter().map(String::len).sum();

    // Record through a loopback "model", then replay with no network at all.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    {
        let server = FixtureServer::start(vec![(CHAT_PATH, chat_reply("**PASS**"))]);
        std::env::set_var(TEST_KEY_VAR, "test-key");
        let live = Provider::live(loopback_config(&server), Arc::new(UreqTransport), Some(dir.path().to_path_buf()));
        let rec_env = Environment::new(live, Arc::new(OfflineTransport)).with_policy(Policy {
            allow_net: true,
            ..policy
        });
        full_corpus_json(&rec_env, &docs);
        ensure(server.hits() > 0, || "recording made no requests".into())?;
    }
    let counter = Arc::new(CountingTransport::new(Arc::new(OfflineTransport)));
    let env = Environment::new(Provider::replay(dir.path()), counter.clone()).with_policy(policy);
    let a = full_corpus_json(&env, &docs);
    let b = full_corpus_json(&env, &docs);
    ensure(a == b, || "replay runs differ".into())?;
    ensure(counter.count() == 0, || format!("replay mode made {} requests", counter.count()))?;
    ensure(!a.iter().any(|j| j.contains("no recorded exchange")), || "replay missed a recording".into())?;
    let rules = RuleCorpus::builtin().rules.len();
    Ok(format!(
        "{rules} rules x {} docs: stub and replay byte-identical ({total_bytes} bytes), 0 connections",
        docs.len()
    ))
}

// ---------------------------------------------------------------------------

pub fn link_checking() -> Check {
    let server = FixtureServer::start(vec![
        ("/ok", Route::new(200, "ok")),
        ("/moved", Route::new(301, "").header("Location", "/ok")),
        ("/missing", Route::new(404, "gone")),
        ("/stall", Route::new(200, "late").delayed(Duration::from_secs(30))),
    ]);
    let md = format!(
        "# Links\n\n[ok]({})\n[moved]({})\n[missing]({})\n[stall]({})\n",
        server.url("/ok"),
        server.url("/moved"),
        server.url("/missing"),
        server.url("/stall")
    );
    let env = Environment::new(Provider::stub(StubTable::default()), Arc::new(UreqTransport)).with_policy(Policy {
        allow_net: true,
        ..Policy::default()
    });
    let r = rule("rule: links\ndescription: d\npipeline:\n  - operator: isLinkAlive\n");
    let started = Instant::now();
    let result = run_rule(&r, &md, &env);
    let elapsed = started.elapsed();
    ensure(result.outcome == Outcome::Fail, || format!("outcome {:?} {:?}", result.outcome, result.reason))?;
    let flagged = lines(&result);
    ensure(flagged == vec![5, 6], || format!("flagged lines {flagged:?}, want [5, 6]: {:?}", result.diagnostics))?;
    let msg = |line: usize| result.diagnostics.iter().find(|d| d.span.start_line == line).unwrap().message.clone();
    ensure(msg(5).contains("404") && msg(5).contains("/missing"), || msg(5))?;
    ensure(msg(6).contains("timed out") && msg(6).contains("/stall"), || msg(6))?;
    ensure(elapsed < Duration::from_millis(10_000), || format!("took {elapsed:?}"))?;
    Ok(format!("200/301 pass, 404 and stall flagged, {elapsed:.2?} (limit 10 s)"))
}

// ---------------------------------------------------------------------------

/// A document with known numbers of each countable target, in total and per
/// line.
pub struct TargetDoc {
    pub text: String,
    pub per_target: BTreeMap<&'static str, BTreeMap<usize, usize>>,
}

pub const COUNT_TARGETS: [&str; 4] = ["emoji", "heading", "link", "inlineCode"];

pub fn target_doc(rng: &mut ChaCha8Rng) -> TargetDoc {
    let mut out = Vec::new();
    let mut per_target: BTreeMap<&'static str, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut bump = |t: &'static str, line: usize, n: usize| {
        if n > 0 {
            *per_target.entry(t).or_default().entry(line).or_insert(0) += n;
        }
    };
    for _ in 0..rng.gen_range(1..7) {
        let heading = rng.gen_bool(0.35);
        let line_no = out.len() + 1;
        let mut tokens: Vec<String> = (0..rng.gen_range(1..5)).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
        let (e, l, c) = (rng.gen_range(0..3), rng.gen_range(0..3), rng.gen_range(0..3));
        for _ in 0..e {
            tokens.push(EMOJI.choose(rng).unwrap().to_string());
        }
        for i in 0..l {
            tokens.push(format!("[{}](https://example.test/{line_no}/{i})", WORDS.choose(rng).unwrap()));
        }
        for _ in 0..c {
            tokens.push(format!("`{} --flag`", WORDS.choose(rng).unwrap()));
        }
        tokens.shuffle(rng);
        let body = tokens.join(" ");
        if heading {
            out.push(format!("{} {body}", "#".repeat(rng.gen_range(1..4))));
            bump("heading", line_no, 1);
        } else {
            out.push(format!("{} {body}", WORDS.choose(rng).unwrap()));
        }
        bump("emoji", line_no, e);
        bump("link", line_no, l);
        bump("inlineCode", line_no, c);
        out.push(String::new());
    }
    TargetDoc {
        text: out.join("\n"),
        per_target,
    }
}

/// count∘extract on document and line scopes vs the generator's tally.
pub fn count_matches_tally(docs: usize, seed: u64) -> Result<usize, String> {
    let env = Environment::hermetic();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for i in 0..docs {
        let doc = target_doc(&mut rng);
        let parsed = Document::new(doc.text.as_str());
        for target in COUNT_TARGETS {
            let r = rule(&format!(
                "rule: c\ndescription: d\npipeline:\n  - operator: extract\n    target: {target}\n    scopes: [document, line]\n  - operator: count\n"
            ));
            let (_, outputs) = pipelint::engine::trace_rule(&r, &parsed, &env, pipelint::ops::Catalog::builtin());
            let Some(pipelint::engine::PipelineValue::Metrics(m)) = outputs.last() else {
                return Err(format!("doc {i} {target}: no metrics"));
            };
            let want = doc.per_target.get(target).cloned().unwrap_or_default();
            let total: usize = want.values().sum();
            let doc_entry = &m.by_scope[&pipelint::Scope::Document];
            ensure(doc_entry.len() == 1 && doc_entry[0].value == total as f64, || {
                format!("doc {i} {target}: document count {:?}, tally {total}\n{}", doc_entry, doc.text)
            })?;
            let got: BTreeMap<usize, usize> = m
                .by_scope
                .get(&pipelint::Scope::Line)
                .into_iter()
                .flatten()
                .map(|e| (e.span.start_line, e.value as usize))
                .collect();
            ensure(got == want, || format!("doc {i} {target}: per-line {got:?}, tally {want:?}\n{}", doc.text))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn oracle_holds(comparator: &str, value: i64, limit: i64) -> bool {
    match comparator {
        "lessthan" => value < limit,
        "lessthanorequal" => value <= limit,
        "greaterthan" => value > limit,
        "greaterthanorequal" => value >= limit,
        "equal" => value == limit,
        other => panic!("unknown comparator {other}"),
    }
}

pub const COMPARATORS: [&str; 5] = ["lessthan", "lessthanorequal", "greaterthan", "greaterthanorequal", "equal"];

/// Lines holding 0..=2 emoji each, for every line count up to 3, checked
/// on the document and line scopes against every comparator and limit in
/// 0..=4.
pub fn comparators_exhaustive() -> Result<usize, String> {
    let env = Environment::hermetic();
    let mut cases = 0;
    let mut shapes: Vec<Vec<usize>> = vec![vec![]];
    for len in 1..=3u32 {
        for code in 0..3usize.pow(len) {
            shapes.push((0..len).map(|i| code / 3usize.pow(i) % 3).collect());
        }
    }
    for shape in &shapes {
        let md = if shape.is_empty() {
            "nothing here".to_string()
        } else {
            shape.iter().map(|&n| format!("w{}", " 🎉".repeat(n))).collect::<Vec<_>>().join("\n\n")
        };
        for comparator in COMPARATORS {
            for limit in 0..=4i64 {
                for scope in ["document", "line"] {
                    let r = rule(&format!(
                        "rule: t\ndescription: d\npipeline:\n  - operator: extract\n    target: emoji\n    scopes: [{scope}]\n  - operator: count\n  - operator: threshold\n    conditions:\n      - scope: {scope}\n        comparator: {comparator}\n        limit: {limit}\n"
                    ));
                    // Document: the total. Line: every line that has emoji
                    // (empty segments produce no entry).
                    let want = if scope == "document" {
                        oracle_holds(comparator, shape.iter().sum::<usize>() as i64, limit)
                    } else {
                        shape.iter().filter(|&&n| n > 0).all(|&n| oracle_holds(comparator, n as i64, limit))
                    };
                    let got = run_rule(&r, &md, &env).outcome;
                    let want_outcome = if want { Outcome::Pass } else { Outcome::Fail };
                    ensure(got == want_outcome, || {
                        format!("{shape:?} {scope} {comparator} {limit}: got {got:?}, want {want_outcome:?}")
                    })?;
                    cases += 1;
                }
            }
        }
    }
    Ok(cases)
}

/// Swapping the two extract steps changes which target is counted.
pub fn non_commutativity() -> Result<(), String> {
    let make = |first: &str, second: &str| {
        rule(&format!(
            "rule: swap\ndescription: d\npipeline:\n  - operator: extract\n    target: {first}\n  - operator: extract\n    target: {second}\n  - operator: count\n  - operator: threshold\n    conditions:\n      - scope: document\n        comparator: lessthan\n        limit: 1\n"
        ))
    };
    let md = "# One heading\n\nNo emoji here.\n";
    let env = Environment::hermetic();
    let a = run_rule(&make("heading", "emoji"), md, &env).outcome;
    let b = run_rule(&make("emoji", "heading"), md, &env).outcome;
    ensure(a == Outcome::Pass && b == Outcome::Fail, || format!("heading→emoji {a:?}, emoji→heading {b:?}"))
}

pub fn coercion_properties() -> Check {
    let started = Instant::now();
    let counted = count_matches_tally(500, 6)?;
    let cases = comparators_exhaustive()?;
    non_commutativity()?;
    Ok(format!(
        "{} docs x 4 targets ({counted} tallies), {cases} comparator cases, swap regression holds, {:.2?}",
        counted / 4,
        started.elapsed()
    ))
}

// ---------------------------------------------------------------------------

pub fn recipe_expressivity() -> Check {
    let (n, problems) = super::recipe_disagreements();
    ensure(n >= 6, || format!("only {n} recipes"))?;
    ensure(problems.is_empty(), || problems.join("; "))?;
    Ok(format!("{n} recipes, 12 rules each, answer key matched"))
}

// ---------------------------------------------------------------------------

pub fn cli_output(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_pipelint"))
        .args(args)
        .env_remove(TEST_KEY_VAR)
        .output()
        .expect("run binary");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn post_json(url: &str, body: &serde_json::Value) -> (u16, serde_json::Value) {
    let resp = UreqTransport
        .send(&HttpRequest::post_json(url, body, Duration::from_secs(30)))
        .expect("request");
    (resp.status, serde_json::from_slice(&resp.body).expect("json body"))
}

pub fn stub_server(stub: &Path) -> pipelint::cli::server::ServerHandle {
    let opts = LlmOptions {
        stub_file: Some(stub.to_path_buf()),
        ..LlmOptions::default()
    };
    let env = build_environment(Policy::default(), &opts, None).unwrap();
    spawn_background("127.0.0.1:0".parse().unwrap(), AppState::new(RuleCorpus::builtin().clone(), env)).unwrap()
}

pub fn cli_api_parity() -> Check {
    let stub = fixture("stubs/pass.yaml");
    let stub_arg = stub.to_str().unwrap();
    let server = stub_server(&stub);
    let mut compared = 0;
    for name in ["sample.md", "clean.md"] {
        let path = fixture(&format!("readmes/{name}"));
        let path_arg = path.to_str().unwrap();
        let (_, stdout, stderr) = cli_output(&["run", "--preset", "software-library", "--format", "json", "--stub-file", stub_arg, path_arg]);
        let cli: serde_json::Value = serde_json::from_str(stdout.trim()).map_err(|e| format!("{e}: {stdout} {stderr}"))?;
        let (status, api) = post_json(
            &server.url("/api/lint"),
            &serde_json::json!({
                "markdown": std::fs::read_to_string(&path).unwrap(),
                "preset": "software-library",
                "documentPath": path_arg,
            }),
        );
        ensure(status == 200, || format!("API status {status}: {api}"))?;
        ensure(cli == api, || format!("{name}: CLI and API reports differ\nCLI: {cli}\nAPI: {api}"))?;
        compared += 1;
    }

    let clean = fixture("readmes/clean.md");
    let failing = fixture("readmes/emoji-heavy.md");
    let codes = [
        ("pass", cli_output(&["run", "--rules", "enforce-emoji-limit,enforce-newline-at-eof", clean.to_str().unwrap()]).0, 0),
        ("fail", cli_output(&["run", "--rules", "enforce-emoji-limit", failing.to_str().unwrap()]).0, 1),
        ("unknown rule", cli_output(&["run", "--rules", "no-such-rule", clean.to_str().unwrap()]).0, 2),
        ("unknown preset", cli_output(&["run", "--preset", "no-such-preset", clean.to_str().unwrap()]).0, 2),
        ("missing file", cli_output(&["run", "/definitely/not/here.md"]).0, 2),
    ];
    for (what, got, want) in codes {
        ensure(got == want, || format!("{what}: exit {got}, want {want}"))?;
    }
    Ok(format!("{compared} documents field-equal; exit codes 0/1/2/2/2 as specified"))
}
