use serde::Deserialize;
use serde_json::Value;

use super::{parse_params, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, Finding, Judgment, PipelineValue, ValueKind};
use crate::llm::{self, Evaluation, FlowError, LlmError};
use crate::md::SourceSpan;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct EvaluateParams {
    model: Option<String>,
    rule_definition: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixParams {
    prompt: String,
    model: Option<String>,
}

fn model_field() -> crate::dsl::FieldSchema {
    field("model", FieldType::String, Some(Value::Null), "Model id; the configured default when omitted.")
}

/// Live providers count as network access.
fn check_policy(ctx: &ExecutionContext) -> Result<(), OpError> {
    if ctx.env.provider.is_live() && !ctx.env.policy.allow_net {
        return Err(OpError::Disabled("live LLM calls need network access (enable with --allow-net)".into()));
    }
    Ok(())
}

pub(crate) fn llm_error(e: FlowError) -> OpError {
    match e {
        FlowError::Llm(LlmError::Disabled(m)) => OpError::Disabled(m),
        // An empty stub table means no model is configured at all.
        FlowError::Llm(LlmError::StubMiss) => {
            OpError::Disabled("no LLM configured: stub mode has no response for this prompt".into())
        }
        other => OpError::Failed(other.to_string()),
    }
}

pub struct EvaluateUsingLlm;

impl Operator for EvaluateUsingLlm {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "evaluateUsingLLM",
            "Evaluates the current document against a provided rule definition using an LLM and returns PASS or FAIL with diagnostics.",
            "any -> Verdict",
            vec![
                model_field(),
                field("ruleDefinition", FieldType::String, None, "Natural-language statement of what the document must satisfy."),
            ],
            &["operator: evaluateUsingLLM\nruleDefinition: The README must explain how to install the project."],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Verdict)
    }

    fn run(&self, ctx: &mut ExecutionContext, params: &Params, _: Option<&PipelineValue>) -> Result<PipelineValue, OpError> {
        let p: EvaluateParams = parse_params(params)?;
        check_policy(ctx)?;
        let timeout = ctx.clamp(ctx.env.provider.default_timeout());
        let verdict = llm::evaluate_document(
            &ctx.env.provider,
            &Evaluation {
                rule: ctx.rule,
                rule_definition: &p.rule_definition,
                step_outputs: &ctx.step_outputs,
                prior_diagnostics: &ctx.diagnostics,
                markdown: ctx.markdown(),
                model: p.model.as_deref(),
                timeout: Some(timeout),
            },
        )
        .map_err(llm_error)?;
        if verdict.passed() {
            return Ok(PipelineValue::Verdict(Judgment {
                passed: true,
                diagnostics: Vec::new(),
                message: None,
            }));
        }
        let hint = (!verdict.suggestion.is_empty()).then(|| verdict.suggestion.clone());
        let finding = |line: Option<usize>| {
            let mut f = Finding::new(verdict.issue.clone());
            if let Some(l) = line {
                f = f.at(SourceSpan::line(l));
            }
            if let Some(h) = &hint {
                f = f.hint(h.clone());
            }
            f
        };
        let diagnostics = if verdict.lines.is_empty() {
            vec![ctx.diagnostic(finding(None))]
        } else {
            verdict.lines.iter().map(|&l| ctx.diagnostic(finding(Some(l)))).collect()
        };
        Ok(PipelineValue::Verdict(Judgment {
            passed: false,
            diagnostics,
            message: Some(verdict.issue),
        }))
    }
}

pub struct FixUsingLlm;

impl Operator for FixUsingLlm {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "fixUsingLLM",
            "Attaches an LLM fix to the rule: when a fix is requested for one of its diagnostics, the prompt says what to change. Passes its input through unchanged.",
            "any -> same",
            vec![
                field("prompt", FieldType::String, None, "What the fix should do."),
                model_field(),
            ],
            &["operator: fixUsingLLM\nprompt: Add alt text describing each image."],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
    }

    fn output(&self, _: &Params, input: Option<ValueKind>) -> Option<ValueKind> {
        Some(input.unwrap_or(ValueKind::Document))
    }

    fn passthrough(&self) -> bool {
        true
    }

    fn run(&self, ctx: &mut ExecutionContext, params: &Params, input: Option<&PipelineValue>) -> Result<PipelineValue, OpError> {
        let p: FixParams = parse_params(params)?;
        ctx.fix_prompt = Some(p.prompt);
        ctx.fix_model = p.model;
        Ok(input
            .cloned()
            .unwrap_or_else(|| PipelineValue::Document(ctx.markdown().to_string())))
    }
}
