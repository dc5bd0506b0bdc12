use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{ms, parse_params, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldIssue, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, PipelineValue, ValueKind};
use crate::net::{HttpRequest, TransportError};

static REPO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[A-Za-z0-9_.-]+/[A-Za-z0-9_.-]+$").unwrap());
const TIMEOUT_MS: u64 = 15_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FetchType {
    Paths,
    Content,
    Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct FetchParams {
    repo: String,
    #[serde(default = "default_branch")]
    branch: String,
    #[serde(default = "default_file")]
    file_name: String,
    #[serde(default = "default_type")]
    fetch_type: FetchType,
    meta_path: Option<String>,
    #[serde(default)]
    use_custom_meta_path: bool,
}

fn default_branch() -> String {
    "main".into()
}
fn default_file() -> String {
    "README.md".into()
}
fn default_type() -> FetchType {
    FetchType::Content
}

pub struct FetchFromGithub;

impl Operator for FetchFromGithub {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "fetchFromGithub",
            "Fetches README files (paths or content) or repository metadata from a GitHub repo. Requires network access.",
            "none -> Document (content) | Opaque (paths, metadata)",
            vec![
                field("repo", FieldType::String, None, "Repository as owner/name."),
                field("branch", FieldType::String, Some(json!("main")), "Branch or ref to read."),
                field("fileName", FieldType::String, Some(json!("README.md")), "File to fetch (content) or match by name (paths)."),
                field("fetchType", FieldType::Enum(vec!["paths", "content", "metadata"]), Some(json!("content")), "What to fetch."),
                field("metaPath", FieldType::String, Some(Value::Null), "Dotted path into the metadata, e.g. `default_branch` or `owner.login`."),
                field("useCustomMetaPath", FieldType::Boolean, Some(json!(false)), "Apply metaPath to the metadata."),
            ],
            &["operator: fetchFromGithub\nrepo: octocat/Hello-World\nfetchType: content"],
        )
        .with_check(|params| match params.get("repo").and_then(Value::as_str) {
            Some(r) if !REPO.is_match(r) => vec![FieldIssue {
                field: "repo".into(),
                message: format!("`{r}` is not of the form owner/name"),
            }],
            _ => vec![],
        })
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
    }

    fn output(&self, params: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        match params.get("fetchType").and_then(Value::as_str) {
            None | Some("content") => Some(ValueKind::Document),
            _ => Some(ValueKind::Opaque),
        }
    }

    fn run(&self, ctx: &mut ExecutionContext, params: &Params, _: Option<&PipelineValue>) -> Result<PipelineValue, OpError> {
        let p: FetchParams = parse_params(params)?;
        if !REPO.is_match(&p.repo) {
            return Err(OpError::Config(format!("`{}` is not of the form owner/name", p.repo)));
        }
        if !ctx.env.policy.allow_net {
            return Err(OpError::Disabled("network access is disabled (enable with --allow-net)".into()));
        }
        let base = ctx.env.github_api_base.trim_end_matches('/');
        let get = |url: String, accept: &str| -> Result<String, OpError> {
            let request = HttpRequest::get(url.clone(), ctx.clamp(ms(TIMEOUT_MS))).header("Accept", accept);
            let response = ctx.env.transport.send(&request).map_err(|e| match e {
                TransportError::Timeout => OpError::Timeout(format!("fetching {url}")),
                other => OpError::Failed(format!("fetch failed: {other}")),
            })?;
            match response.status {
                200 => Ok(response.text()),
                403 | 429 => Err(OpError::Failed(format!(
                    "fetch rate-limited (HTTP {}, retriable): {url}",
                    response.status
                ))),
                s => Err(OpError::Failed(format!("fetch failed with HTTP {s}: {url}"))),
            }
        };
        let value = match p.fetch_type {
            FetchType::Content => PipelineValue::Document(get(
                format!("{base}/repos/{}/contents/{}?ref={}", p.repo, p.file_name, p.branch),
                "application/vnd.github.raw",
            )?),
            FetchType::Paths => {
                let body = get(
                    format!("{base}/repos/{}/git/trees/{}?recursive=1", p.repo, p.branch),
                    "application/vnd.github+json",
                )?;
                let tree: Value = serde_json::from_str(&body).map_err(|e| OpError::Failed(format!("bad tree response: {e}")))?;
                let wanted = p.file_name.to_lowercase();
                let paths: Vec<Value> = tree["tree"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .filter_map(|e| e["path"].as_str())
                    .filter(|path| path.rsplit('/').next().is_some_and(|n| n.to_lowercase() == wanted))
                    .map(|path| Value::String(path.into()))
                    .collect();
                PipelineValue::Opaque(Value::Array(paths))
            }
            FetchType::Metadata => {
                let body = get(format!("{base}/repos/{}", p.repo), "application/vnd.github+json")?;
                let meta: Value =
                    serde_json::from_str(&body).map_err(|e| OpError::Failed(format!("bad metadata response: {e}")))?;
                match (&p.meta_path, p.use_custom_meta_path || p.meta_path.is_some()) {
                    (Some(path), true) => PipelineValue::Opaque(drill(&meta, path).ok_or_else(|| {
                        OpError::Failed(format!("metadata has no value at `{path}`"))
                    })?),
                    _ => PipelineValue::Opaque(meta),
                }
            }
        };
        Ok(value)
    }
}

fn drill(value: &Value, path: &str) -> Option<Value> {
    let mut cur = value;
    for part in path.split('.').filter(|p| !p.is_empty()) {
        cur = match cur {
            Value::Array(items) => items.get(part.parse::<usize>().ok()?)?,
            other => other.get(part)?,
        };
    }
    Some(cur.clone())
}
