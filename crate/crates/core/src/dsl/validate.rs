use regex::Regex;
use serde_json::Value;

use super::rule::{read_rule, Rule, RuleParse};
use super::schema::{FieldSchema, FieldType, OperatorSchema};
use super::violation::{Violation, ViolationKind};

/// Checks every step's operator id and parameters against the catalog.
/// Returns an empty list when the rule conforms.
pub fn validate_rule(rule: &Rule, catalog: &[OperatorSchema]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, step) in rule.pipeline.iter().enumerate() {
        let path = format!("$.pipeline[{i}]");
        let Some(schema) = catalog.iter().find(|s| s.id == step.operator) else {
            let ids: Vec<&str> = catalog.iter().map(|s| s.id.as_str()).collect();
            let mut message = format!("unknown operator `{}`", step.operator);
            if let Some(close) = closest(&step.operator, &ids) {
                message.push_str(&format!("; did you mean `{close}`?"));
            }
            out.push(
                Violation::new(ViolationKind::UnknownOperator, format!("{path}.operator"), message)
                    .step(i)
                    .field("operator")
                    .expected(format!("one of: {}", ids.join(", "))),
            );
            continue;
        };

        for (key, value) in &step.params {
            let field_path = format!("{path}.{key}");
            match schema.field(key) {
                None => out.push(
                    Violation::new(
                        ViolationKind::UnknownField,
                        field_path,
                        format!("`{key}` is not an allowed field of `{}`", schema.id),
                    )
                    .step(i)
                    .field(key)
                    .expected(format!("allowed fields: [{}]", schema.allowed_fields.join(", "))),
                ),
                Some(field) => check_value(value, field, &field_path, i, &mut out),
            }
        }
        for field in schema.fields.iter().filter(|f| f.required()) {
            if !step.params.contains_key(&field.name) {
                out.push(
                    Violation::new(
                        ViolationKind::MissingField,
                        &path,
                        format!("`{}` requires field `{}`", schema.id, field.name),
                    )
                    .step(i)
                    .field(&field.name)
                    .expected(field.ty.describe()),
                );
            }
        }
        if let Some(check) = schema.check {
            for issue in check(&step.params) {
                out.push(
                    Violation::new(ViolationKind::InvalidValue, format!("{path}.{}", issue.field), issue.message)
                        .step(i)
                        .field(issue.field),
                );
            }
        }
    }
    out
}

fn check_value(value: &Value, field: &FieldSchema, path: &str, step: usize, out: &mut Vec<Violation>) {
    // A null stands for "use the default" on optional fields.
    if value.is_null() && !field.required() {
        return;
    }
    check_type(value, &field.ty, &field.name, path, step, out);
}

fn check_type(value: &Value, ty: &FieldType, name: &str, path: &str, step: usize, out: &mut Vec<Violation>) {
    let mismatch = |out: &mut Vec<Violation>| {
        out.push(
            Violation::new(
                ViolationKind::TypeMismatch,
                path,
                format!("`{name}` has the wrong type: got {}", type_of(value)),
            )
            .step(step)
            .field(name)
            .expected(ty.describe()),
        )
    };
    match ty {
        FieldType::String => {
            if !value.is_string() {
                mismatch(out);
            }
        }
        FieldType::Integer => {
            if !(value.is_i64() || value.is_u64()) {
                mismatch(out);
            }
        }
        FieldType::Number => {
            if !value.is_number() {
                mismatch(out);
            }
        }
        FieldType::Boolean => {
            if !value.is_boolean() {
                mismatch(out);
            }
        }
        FieldType::Enum(values) => match value.as_str() {
            Some(s) if values.contains(&s) => {}
            Some(s) => {
                let mut message = format!("`{s}` is not a valid value for `{name}`");
                if let Some(close) = closest(s, values) {
                    message.push_str(&format!("; did you mean `{close}`?"));
                }
                out.push(
                    Violation::new(ViolationKind::EnumValue, path, message)
                        .step(step)
                        .field(name)
                        .expected(ty.describe()),
                );
            }
            None => mismatch(out),
        },
        FieldType::Regex => match value.as_str() {
            Some(s) => {
                if let Err(e) = Regex::new(s) {
                    out.push(
                        Violation::new(ViolationKind::InvalidValue, path, format!("invalid regular expression: {e}"))
                            .step(step)
                            .field(name)
                            .expected(ty.describe()),
                    );
                }
            }
            None => mismatch(out),
        },
        FieldType::Array(item) => match value.as_array() {
            Some(items) => {
                for (j, v) in items.iter().enumerate() {
                    check_type(v, item, name, &format!("{path}[{j}]"), step, out);
                }
            }
            None => mismatch(out),
        },
        FieldType::Object(fields) => match value.as_object() {
            Some(map) => {
                for (key, v) in map {
                    let sub = format!("{path}.{key}");
                    match fields.iter().find(|f| &f.name == key) {
                        Some(f) => check_value(v, f, &sub, step, out),
                        None => {
                            let names: Vec<_> = fields.iter().map(|f| f.name.as_str()).collect();
                            out.push(
                                Violation::new(
                                    ViolationKind::UnknownField,
                                    sub,
                                    format!("`{key}` is not an allowed key inside `{name}`"),
                                )
                                .step(step)
                                .field(key)
                                .expected(format!("allowed fields: [{}]", names.join(", "))),
                            );
                        }
                    }
                }
                for f in fields.iter().filter(|f| f.required()) {
                    if !map.contains_key(&f.name) {
                        out.push(
                            Violation::new(ViolationKind::MissingField, path, format!("missing key `{}`", f.name))
                                .step(step)
                                .field(&f.name)
                                .expected(f.ty.describe()),
                        );
                    }
                }
            }
            None => mismatch(out),
        },
        FieldType::StepRef => {
            let ok = match value {
                Value::String(s) => s == "document",
                Value::Number(n) => n.as_u64().is_some_and(|k| (k as usize) < step),
                _ => false,
            };
            if !ok {
                out.push(
                    Violation::new(
                        ViolationKind::InvalidValue,
                        path,
                        format!("`{name}` must reference an earlier step, got {value}"),
                    )
                    .step(step)
                    .field(name)
                    .expected(ty.describe()),
                );
            }
        }
    }
}

fn type_of(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_f64() => "number",
        Value::Number(_) => "integer",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "mapping",
    }
}

fn closest<'a>(needle: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::damerau_levenshtein(needle, c), *c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 4))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c)
}

fn syntax_violation(err: &serde_yaml::Error) -> Violation {
    let mut v = Violation::new(ViolationKind::Syntax, "$", format!("YAML syntax error: {err}"));
    if let Some(loc) = err.location() {
        v = v.line(loc.line());
    }
    v
}

/// Parses and validates one rule document against `catalog`.
pub fn parse_rule_with(yaml: &str, catalog: &[OperatorSchema]) -> RuleParse {
    let value: serde_yaml::Value = match serde_yaml::from_str(yaml) {
        Ok(v) => v,
        Err(e) => {
            return RuleParse {
                rule: None,
                violations: vec![syntax_violation(&e)],
            }
        }
    };
    check_document(&value, catalog)
}

fn check_document(value: &serde_yaml::Value, catalog: &[OperatorSchema]) -> RuleParse {
    let mut parsed = read_rule(value);
    if let Some(rule) = &parsed.rule {
        parsed.violations.extend(validate_rule(rule, catalog));
    }
    parsed
}

/// Parses every `---`-separated rule document in `yaml`.
pub fn parse_rules_with(yaml: &str, catalog: &[OperatorSchema]) -> Vec<RuleParse> {
    use serde::Deserialize;
    let mut out = Vec::new();
    for (i, doc) in serde_yaml::Deserializer::from_str(yaml).enumerate() {
        let mut parsed = match serde_yaml::Value::deserialize(doc) {
            Ok(serde_yaml::Value::Null) => continue,
            Ok(value) => check_document(&value, catalog),
            Err(e) => RuleParse {
                rule: None,
                violations: vec![syntax_violation(&e)],
            },
        };
        for v in &mut parsed.violations {
            v.document = Some(i);
        }
        let stop = parsed.rule.is_none() && parsed.violations.iter().any(|v| v.kind == ViolationKind::Syntax);
        out.push(parsed);
        if stop {
            break;
        }
    }
    out
}

/// Parses and validates one rule against the built-in catalog.
pub fn parse_rule(yaml: &str) -> Result<Rule, Vec<Violation>> {
    parse_rule_with(yaml, crate::ops::Catalog::builtin().schemas()).into_result()
}
