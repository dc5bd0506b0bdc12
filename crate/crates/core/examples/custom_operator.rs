//! Add an operator to a copy of the built-in catalog and use it from YAML.
//!
//! cargo run --example custom_operator

use pipelint::dsl::{field, parse_rule_with, FieldType, OperatorSchema};
use pipelint::engine::{run_rule_with, Environment, ExecutionContext, Finding, PipelineValue, ValueKind};
use pipelint::ops::{Catalog, InputDecl, OpError, Operator, Params};
use pipelint::Document;
use serde_json::json;

/// Flags lines longer than `max` characters.
struct LineWidth;

impl Operator for LineWidth {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "lineWidth",
            "Flags lines longer than `max` characters.",
            "Document -> Diagnostics",
            vec![field("max", FieldType::Integer, Some(json!(80)), "Longest allowed line.")],
            &["operator: lineWidth\nmax: 100"],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Diagnostics)
    }

    fn run(&self, ctx: &mut ExecutionContext, params: &Params, _: Option<&PipelineValue>) -> Result<PipelineValue, OpError> {
        let max = params.get("max").and_then(|v| v.as_u64()).unwrap_or(80) as usize;
        let mut out = Vec::new();
        let mut offset = 0;
        for line in ctx.markdown().split_inclusive('\n') {
            let width = line.trim_end_matches('\n').chars().count();
            if width > max {
                let span = ctx.doc.span(offset..offset + line.trim_end().len());
                out.push(ctx.diagnostic(Finding::new(format!("line is {width} characters wide")).at(span)));
            }
            offset += line.len();
        }
        Ok(PipelineValue::Diagnostics(out))
    }
}

fn main() {
    let mut catalog = Catalog::standard();
    catalog.register(Box::new(LineWidth));

    let rule = parse_rule_with("rule: narrow\ndescription: d\npipeline:\n  - operator: lineWidth\n    max: 20\n", catalog.schemas())
        .into_result()
        .expect("valid against the extended catalog");
    let doc = Document::new("# Title\n\nThis line is certainly longer than twenty.\nshort\n");
    let r = run_rule_with(&rule, &doc, &Environment::hermetic(), &catalog);
    for d in &r.diagnostics {
        println!("line {}: {}", d.span.start_line, d.message);
    }
}
