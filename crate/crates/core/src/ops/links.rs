use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::json;

use super::{ms, parse_params, source_doc, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, Finding, PipelineValue, ValueKind};
use crate::md::{NodeKind, SourceSpan};
use crate::net::{HttpRequest, TransportError};

pub const DEFAULT_TIMEOUT_MS: u64 = 5000;
pub const DEFAULT_ALLOWED: [u16; 6] = [200, 204, 301, 302, 307, 308];
const MAX_IN_FLIGHT: usize = 8;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkParams {
    #[serde(default = "default_timeout")]
    timeout: u64,
    #[serde(default = "default_allowed")]
    allowed_status_codes: Vec<u16>,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

fn default_allowed() -> Vec<u16> {
    DEFAULT_ALLOWED.to_vec()
}

enum Probe {
    Status(u16),
    Timeout,
    Unreachable(String),
}

pub struct IsLinkAlive;

impl Operator for IsLinkAlive {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "isLinkAlive",
            "Checks all external links found in the Markdown content to verify they are reachable and return an allowed HTTP status code.",
            "Document -> Diagnostics",
            vec![
                field("timeout", FieldType::Integer, Some(json!(DEFAULT_TIMEOUT_MS)), "Request timeout in milliseconds for each link check."),
                field(
                    "allowed_status_codes",
                    FieldType::Array(Box::new(FieldType::Integer)),
                    Some(json!(DEFAULT_ALLOWED)),
                    "List of acceptable HTTP status codes for a link to be considered alive.",
                ),
            ],
            &["operator: isLinkAlive\ntimeout: 3000\nallowed_status_codes:\n  - 200\n  - 301\n  - 302"],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Diagnostics)
    }

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: LinkParams = parse_params(params)?;
        // Occurrences per distinct URL, in document order.
        let mut links: BTreeMap<String, (usize, Vec<SourceSpan>)> = BTreeMap::new();
        {
            let doc = source_doc(ctx, input);
            for (order, node) in doc.ast().descendants_of_kind(NodeKind::Link).enumerate() {
                let url = node.attr("url").unwrap_or_default();
                if url.starts_with("http://") || url.starts_with("https://") {
                    links.entry(url.to_string()).or_insert((order, Vec::new())).1.push(node.span);
                }
            }
        }
        if links.is_empty() {
            ctx.note("no external links found");
            return Ok(PipelineValue::Diagnostics(Vec::new()));
        }
        if !ctx.env.policy.allow_net {
            return Err(OpError::Disabled("network access is disabled (enable with --allow-net)".into()));
        }

        let mut urls: Vec<(String, usize)> = links.iter().map(|(u, (o, _))| (u.clone(), *o)).collect();
        urls.sort_by_key(|(_, o)| *o);
        let timeout = ctx.clamp(ms(p.timeout));
        let transport = ctx.env.transport.clone();
        let results: Mutex<BTreeMap<String, Result<Probe, String>>> = Mutex::new(BTreeMap::new());
        let next = Mutex::new(urls.iter());
        std::thread::scope(|s| {
            for _ in 0..MAX_IN_FLIGHT.min(urls.len()) {
                s.spawn(|| loop {
                    let Some((url, _)) = next.lock().unwrap().next() else {
                        break;
                    };
                    let outcome = match transport.send(&HttpRequest::get(url.as_str(), timeout)) {
                        Ok(resp) => Ok(Probe::Status(resp.status)),
                        Err(TransportError::Timeout) => Ok(Probe::Timeout),
                        Err(TransportError::Connect(e)) | Err(TransportError::Other(e)) => Ok(Probe::Unreachable(e)),
                        Err(TransportError::Unavailable(e)) => Err(e),
                    };
                    results.lock().unwrap().insert(url.clone(), outcome);
                });
            }
        });

        let results = results.into_inner().unwrap();
        let mut diagnostics = Vec::new();
        for (url, _) in &urls {
            let message = match &results[url] {
                Err(e) => return Err(OpError::Failed(format!("network layer unavailable: {e}"))),
                Ok(Probe::Status(code)) if p.allowed_status_codes.contains(code) => continue,
                Ok(Probe::Status(code)) => format!("Link `{url}` returned HTTP {code}"),
                Ok(Probe::Timeout) => format!("Link `{url}` timed out after {} ms", timeout.as_millis()),
                Ok(Probe::Unreachable(e)) => format!("Link `{url}` is unreachable: {e}"),
            };
            for span in &links[url].1 {
                diagnostics.push(ctx.diagnostic(Finding::new(message.clone()).at(*span).text(url.clone())));
            }
        }
        Ok(PipelineValue::Diagnostics(diagnostics))
    }
}
