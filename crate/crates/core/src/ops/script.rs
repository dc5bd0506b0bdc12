use std::collections::BTreeMap;
use std::sync::LazyLock;

use boa_engine::property::Attribute;
use boa_engine::{js_string, Context, JsValue, Source};
use regex::Regex;
use serde::Deserialize;
use serde_json::Value;

use super::{parse_params, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, Finding, Judgment, MetricEntry, MetricSummary, PipelineValue, ValueKind};
use crate::md::{Scope, SourceSpan};

const LOOP_LIMIT: u64 = 1_000_000;
const RECURSION_LIMIT: usize = 512;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptParams {
    code: String,
}

pub struct CustomCode;

impl Operator for CustomCode {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "customCode",
            "Executes user-provided JavaScript as a function body with `input` (the previous step's value) and `markdown` in scope. Returning a boolean yields a verdict, a number yields a document metric, an array of {message, line?, text?} objects yields diagnostics; anything else is passed on as-is. Requires script execution to be enabled.",
            "any -> Verdict | Metrics | Diagnostics | Opaque",
            vec![field("code", FieldType::String, None, "JavaScript function body; use `return`.")],
            &["operator: customCode\ncode: |\n  return markdown.split(/\\s+/).length > 500;"],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        None
    }

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: ScriptParams = parse_params(params)?;
        if !ctx.env.policy.allow_scripts {
            return Err(OpError::Disabled("script execution is disabled (enable with --allow-scripts)".into()));
        }
        let input_json = match input {
            Some(v) => serde_json::to_value(v)
                .map(|mut j| j.get_mut("value").map(Value::take).unwrap_or(Value::Null))
                .map_err(|e| OpError::Failed(e.to_string()))?,
            None => Value::Null,
        };
        let result = eval_script(&p.code, &input_json, ctx.markdown()).map_err(OpError::Failed)?;
        Ok(interpret(ctx, result))
    }
}

static POSITION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"line (\d+)").unwrap());

/// Evaluates `code` as a function body. Error positions refer to lines of
/// `code` itself.
pub(crate) fn eval_script(code: &str, input: &Value, markdown: &str) -> Result<Value, String> {
    let mut context = Context::default();
    context.runtime_limits_mut().set_loop_iteration_limit(LOOP_LIMIT);
    context.runtime_limits_mut().set_recursion_limit(RECURSION_LIMIT);
    let error = |e: boa_engine::JsError| fix_position(&e.to_string());

    let input = JsValue::from_json(input, &mut context).map_err(error)?;
    let markdown = JsValue::from(js_string!(markdown));
    context
        .register_global_property(js_string!("input"), input, Attribute::all())
        .map_err(error)?;
    context
        .register_global_property(js_string!("markdown"), markdown, Attribute::all())
        .map_err(error)?;
    let source = format!("(function () {{\n{code}\n}})()");
    let value = context.eval(Source::from_bytes(source.as_bytes())).map_err(error)?;
    if value.is_undefined() {
        return Ok(Value::Null);
    }
    value.to_json(&mut context).map_err(error)
}

fn fix_position(message: &str) -> String {
    let fixed = POSITION.replace_all(message, |caps: &regex::Captures| {
        let line: usize = caps[1].parse().unwrap_or(1);
        format!("line {}", line.saturating_sub(1).max(1))
    });
    format!("script error: {fixed}")
}

fn interpret(ctx: &ExecutionContext, result: Value) -> PipelineValue {
    match result {
        Value::Bool(passed) => {
            let diagnostics = if passed {
                Vec::new()
            } else {
                vec![ctx.diagnostic(Finding::new("custom check returned false"))]
            };
            PipelineValue::Verdict(Judgment {
                passed,
                diagnostics,
                message: None,
            })
        }
        Value::Number(n) => {
            let value = n.as_f64().unwrap_or(0.0);
            let span = ctx.doc.span(0..ctx.doc.text().len());
            PipelineValue::Metrics(MetricSummary {
                metric: "custom value".into(),
                by_scope: BTreeMap::from([(
                    Scope::Document,
                    vec![MetricEntry {
                        span,
                        value,
                        segment: Some(0),
                        label: None,
                    }],
                )]),
            })
        }
        Value::Array(items) if is_finding_list(&items) => {
            let diagnostics = items.iter().map(|item| ctx.diagnostic(finding_of(item))).collect();
            PipelineValue::Diagnostics(diagnostics)
        }
        other => PipelineValue::Opaque(other),
    }
}

fn is_finding_list(items: &[Value]) -> bool {
    items
        .iter()
        .all(|i| i.get("message").and_then(Value::as_str).is_some_and(|m| !m.is_empty()))
}

fn finding_of(item: &Value) -> Finding {
    let mut f = Finding::new(item["message"].as_str().unwrap_or_default());
    if let Some(line) = item.get("line").and_then(Value::as_u64).filter(|l| *l >= 1) {
        f = f.at(SourceSpan::line(line as usize));
    }
    if let Some(text) = item.get("text").and_then(Value::as_str) {
        f = f.text(text);
    }
    f
}
