//! The local JSON API used by the playground.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{rejection::JsonRejection, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::fix::{propose_fix, unified_patch, FixError};
use super::lint::{lint, select, RuleRef};
use crate::corpus::RuleCorpus;
use crate::dsl::{export_catalog, parse_rules, Violation};
use crate::engine::Environment;
use crate::llm::{generate_rule, FlowError, LlmError};
use crate::ops::Catalog;

/// What every request handler sees.
pub struct AppState {
    pub corpus: RuleCorpus,
    pub env: Environment,
    /// Corpus load problems, reported with every lint.
    pub config_errors: Vec<String>,
}

impl AppState {
    pub fn new(corpus: RuleCorpus, env: Environment) -> Self {
        Self {
            corpus,
            env,
            config_errors: Vec::new(),
        }
    }
}

type Shared = Arc<AppState>;

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    extra: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            extra: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(Value::Object(extra)) = self.extra {
            error.as_object_mut().unwrap().extend(extra);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<FlowError> for ApiError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Llm(LlmError::Disabled(m)) => Self::new(StatusCode::FORBIDDEN, "disabled", m),
            FlowError::Llm(l) => Self::new(StatusCode::BAD_GATEWAY, "llm_error", l.to_string()),
            FlowError::Generation { message, raw, violations } => Self {
                extra: Some(json!({ "raw": raw, "violations": violations })),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_generated_rule", message)
            },
            other => Self::new(StatusCode::BAD_GATEWAY, "llm_error", other.to_string()),
        }
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/lint", post(lint_handler))
        .route("/api/rules/generate", post(generate_handler))
        .route("/api/rules/validate", post(validate_handler))
        .route("/api/fix", post(fix_handler))
        .route("/api/presets", get(presets_handler))
        .route("/api/rules", get(rules_handler))
        .route("/api/operators", get(operators_handler))
        .with_state(Arc::new(state))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct LintBody {
    markdown: String,
    preset: Option<String>,
    #[serde(default)]
    rules: Vec<String>,
    /// Shown as `documentPath` in the report.
    document_path: Option<String>,
}

const INPUT_PATH: &str = "<input>";

async fn lint_handler(State(state): State<Shared>, body: Result<Json<LintBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    if body.preset.is_some() && !body.rules.is_empty() {
        return Err(ApiError::bad_request("give either `preset` or `rules`, not both"));
    }
    let refs: Vec<RuleRef> = body.rules.iter().map(|r| RuleRef::from_api(r)).collect();
    let (rules, mut errors) = select(&state.corpus, body.preset.as_deref(), &refs)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "unknown_preset", e.to_string()))?;
    errors.splice(0..0, state.config_errors.iter().cloned());
    let report = tokio::task::spawn_blocking(move || {
        let path = body.document_path.as_deref().unwrap_or(INPUT_PATH);
        lint(&body.markdown, path, &rules, errors, &state.corpus, &state.env)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    Ok(Json(serde_json::to_value(report).expect("reports serialize")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateBody {
    idea: String,
    model: Option<String>,
}

async fn generate_handler(State(state): State<Shared>, body: Result<Json<GenerateBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    if body.idea.trim().is_empty() {
        return Err(ApiError::bad_request("`idea` is empty"));
    }
    if state.env.provider.is_live() && !state.env.policy.allow_net {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "disabled",
            "rule generation needs network access to the live model (start the server with --allow-net)",
        ));
    }
    let generated = tokio::task::spawn_blocking(move || {
        generate_rule(&state.env.provider, &body.idea, Catalog::builtin().schemas(), body.model.as_deref())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(json!({
        "yaml": generated.yaml,
        "rule": generated.rule,
        "warnings": generated.warnings,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateBody {
    yaml: String,
}

async fn validate_handler(body: Result<Json<ValidateBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    let mut rules = Vec::new();
    let mut violations: Vec<Violation> = Vec::new();
    for parsed in parse_rules(&body.yaml) {
        if let (Some(rule), 0) = (&parsed.rule, parsed.errors().count()) {
            rules.push(rule.key());
        }
        violations.extend(parsed.violations);
    }
    let valid = violations.iter().all(Violation::is_warning) && !rules.is_empty();
    Ok(Json(json!({ "valid": valid, "rules": rules, "violations": violations })))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DiagnosticId {
    Index(usize),
    Text(String),
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FixBody {
    markdown: String,
    rule_name: String,
    /// Position of the diagnostic in the rule's result (0-based), as a
    /// number or as `rule-name#n`.
    diagnostic_id: DiagnosticId,
}

async fn fix_handler(State(state): State<Shared>, body: Result<Json<FixBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    let index = match &body.diagnostic_id {
        DiagnosticId::Index(i) => *i,
        DiagnosticId::Text(t) => t
            .rsplit_once('#')
            .map_or(t.as_str(), |(_, n)| n)
            .parse()
            .map_err(|_| ApiError::bad_request(format!("bad diagnosticId `{t}`")))?,
    };
    let rule = state
        .corpus
        .rule(&body.rule_name)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_rule", format!("unknown rule `{}`", body.rule_name)))?;
    let state2 = state.clone();
    tokio::task::spawn_blocking(move || {
        let report = lint(&body.markdown, INPUT_PATH, std::slice::from_ref(&rule), vec![], &state2.corpus, &state2.env);
        let diagnostics = &report.rule_results[0].diagnostics;
        let diagnostic = diagnostics.get(index).ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_diagnostic",
                format!("rule `{}` reported {} diagnostic(s); no index {index}", rule.key(), diagnostics.len()),
            )
        })?;
        let fixed = propose_fix(&rule, diagnostic, &body.markdown, &state2.env).map_err(|e| match e {
            FixError::Flow(f) => ApiError::from(f),
            FixError::NotFixable(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "not_fixable", e.to_string()),
            FixError::NetDisabled => ApiError::new(StatusCode::FORBIDDEN, "disabled", e.to_string()),
        })?;
        Ok(Json(json!({
            "ruleName": rule.key(),
            "diagnosticId": format!("{}#{index}", rule.key()),
            "diagnostic": diagnostic,
            "original": body.markdown,
            "patch": unified_patch("document.md", &body.markdown, &fixed),
            "fixed": fixed,
        })))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn presets_handler(State(state): State<Shared>) -> Json<Value> {
    Json(json!(state.corpus.presets.values().collect::<Vec<_>>()))
}

async fn rules_handler(State(state): State<Shared>) -> Json<Value> {
    Json(json!(state.corpus.list_rules(None)))
}

async fn operators_handler() -> Json<Value> {
    Json(export_catalog(Catalog::builtin().schemas()))
}

/// Serves until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// A server on its own runtime thread, stopped when dropped.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Starts a server on `addr` (port 0 picks a free one) in the background.
pub fn spawn_background(addr: SocketAddr, state: AppState) -> std::io::Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
            let _ = axum::serve(listener, router(state))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
