use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::violation::{Violation, ViolationKind};
use crate::naming::canonical_rule_name;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    #[default]
    Error,
    Warning,
    Info,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Error, Severity::Warning, Severity::Info];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Severity::ALL.into_iter().find(|v| v.as_str() == s).ok_or(())
    }
}

/// One pipeline step: an operator id plus its inline parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorStep {
    pub operator: String,
    pub params: Map<String, Value>,
}

impl OperatorStep {
    pub fn new(operator: &str) -> Self {
        Self {
            operator: operator.into(),
            params: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn param(&self, key: &str) -> Option<&Value> {
        self.params.get(key)
    }
}

impl Serialize for OperatorStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = Map::with_capacity(self.params.len() + 1);
        map.insert("operator".into(), Value::String(self.operator.clone()));
        for (k, v) in &self.params {
            map.insert(k.clone(), v.clone());
        }
        map.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rule {
    #[serde(rename = "rule")]
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    pub pipeline: Vec<OperatorStep>,
}

impl Rule {
    /// Kebab-case key used for lookups, results and ignore directives.
    pub fn key(&self) -> String {
        canonical_rule_name(&self.name)
    }

    pub fn severity(&self) -> Severity {
        self.severity.unwrap_or_default()
    }
}

const RULE_KEYS: [&str; 4] = ["rule", "description", "severity", "pipeline"];

/// Result of reading one rule document: the rule if it could be built, and
/// every violation found (errors and warnings).
#[derive(Debug, Clone)]
pub struct RuleParse {
    pub rule: Option<Rule>,
    pub violations: Vec<Violation>,
}

impl RuleParse {
    fn failed(violations: Vec<Violation>) -> Self {
        Self { rule: None, violations }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !v.is_warning())
    }

    pub fn into_result(self) -> Result<Rule, Vec<Violation>> {
        let errors: Vec<_> = self.violations.into_iter().filter(|v| !v.is_warning()).collect();
        match self.rule {
            Some(rule) if errors.is_empty() => Ok(rule),
            _ => Err(errors),
        }
    }
}

/// Reads the structure of one rule document without consulting the catalog.
pub(crate) fn read_rule(value: &serde_yaml::Value) -> RuleParse {
    let json = match yaml_to_json(value) {
        Ok(v) => v,
        Err(msg) => return RuleParse::failed(vec![Violation::new(ViolationKind::Schema, "$", msg)]),
    };
    let Value::Object(root) = json else {
        return RuleParse::failed(vec![Violation::new(
            ViolationKind::Schema,
            "$",
            "rule document must be a mapping with keys rule, description, pipeline",
        )
        .expected("mapping")]);
    };

    let mut violations = Vec::new();
    for key in root.keys() {
        if !RULE_KEYS.contains(&key.as_str()) {
            violations.push(
                Violation::new(
                    ViolationKind::UnknownKey,
                    format!("$.{key}"),
                    format!("unknown top-level key `{key}` is ignored"),
                )
                .field(key)
                .expected(format!("one of: {}", RULE_KEYS.join(", "))),
            );
        }
    }

    let name = match root.get("rule") {
        None => {
            violations.push(missing_key("rule"));
            None
        }
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Some(_) => {
            violations.push(
                Violation::new(ViolationKind::TypeMismatch, "$.rule", "`rule` must be a non-empty string")
                    .field("rule")
                    .expected("string"),
            );
            None
        }
    };

    let description = match root.get("description") {
        None => {
            violations.push(missing_key("description"));
            None
        }
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            violations.push(
                Violation::new(ViolationKind::TypeMismatch, "$.description", "`description` must be a string")
                    .field("description")
                    .expected("string"),
            );
            None
        }
    };

    let severity = match root.get("severity") {
        None => Some(None),
        Some(Value::String(s)) if s.parse::<Severity>().is_ok() => Some(Some(s.parse().unwrap())),
        Some(other) => {
            violations.push(
                Violation::new(
                    ViolationKind::EnumValue,
                    "$.severity",
                    format!("invalid severity {other}"),
                )
                .field("severity")
                .expected("one of: error, warning, info"),
            );
            None
        }
    };

    let pipeline = match root.get("pipeline") {
        None => {
            violations.push(missing_key("pipeline"));
            None
        }
        Some(Value::Array(items)) if items.is_empty() => {
            violations.push(
                Violation::new(ViolationKind::EmptyPipeline, "$.pipeline", "pipeline must have at least one step")
                    .field("pipeline")
                    .expected("non-empty list of operator steps"),
            );
            None
        }
        Some(Value::Array(items)) => read_steps(items, &mut violations),
        Some(_) => {
            violations.push(
                Violation::new(ViolationKind::TypeMismatch, "$.pipeline", "`pipeline` must be a list of steps")
                    .field("pipeline")
                    .expected("list"),
            );
            None
        }
    };

    let rule = match (name, description, severity, pipeline) {
        (Some(name), Some(description), Some(severity), Some(pipeline)) => Some(Rule {
            name,
            description,
            severity,
            pipeline,
        }),
        _ => None,
    };
    RuleParse { rule, violations }
}

fn read_steps(items: &[Value], violations: &mut Vec<Violation>) -> Option<Vec<OperatorStep>> {
    let mut steps = Vec::with_capacity(items.len());
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        let path = format!("$.pipeline[{i}]");
        let Value::Object(map) = item else {
            violations.push(
                Violation::new(ViolationKind::TypeMismatch, &path, "pipeline step must be a mapping")
                    .step(i)
                    .expected("mapping with an `operator` key"),
            );
            ok = false;
            continue;
        };
        match map.get("operator") {
            Some(Value::String(op)) if !op.trim().is_empty() => {
                let mut params = map.clone();
                params.shift_remove("operator");
                steps.push(OperatorStep {
                    operator: op.trim().to_string(),
                    params,
                });
            }
            Some(_) => {
                violations.push(
                    Violation::new(ViolationKind::TypeMismatch, format!("{path}.operator"), "`operator` must be a string")
                        .step(i)
                        .field("operator")
                        .expected("operator id"),
                );
                ok = false;
            }
            None => {
                violations.push(
                    Violation::new(ViolationKind::MissingField, &path, "pipeline step is missing `operator`")
                        .step(i)
                        .field("operator")
                        .expected("operator id"),
                );
                ok = false;
            }
        }
    }
    ok.then_some(steps)
}

fn missing_key(key: &str) -> Violation {
    Violation::new(ViolationKind::MissingKey, "$", format!("missing required key `{key}`"))
        .field(key)
        .expected(format!("`{key}` at the top level"))
}

/// Converts YAML into JSON values; mapping keys must be strings or scalars.
pub(crate) fn yaml_to_json(value: &serde_yaml::Value) -> Result<Value, String> {
    use serde_yaml::Value as Y;
    Ok(match value {
        Y::Null => Value::Null,
        Y::Bool(b) => Value::Bool(*b),
        Y::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::from(i)
            } else if let Some(u) = n.as_u64() {
                Value::from(u)
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                serde_json::Number::from_f64(f)
                    .map(Value::Number)
                    .ok_or_else(|| format!("non-finite number {f}"))?
            }
        }
        Y::String(s) => Value::String(s.clone()),
        Y::Sequence(items) => Value::Array(items.iter().map(yaml_to_json).collect::<Result<_, _>>()?),
        Y::Mapping(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                let key = match k {
                    Y::String(s) => s.clone(),
                    Y::Number(n) => n.to_string(),
                    Y::Bool(b) => b.to_string(),
                    _ => return Err("mapping keys must be scalars".into()),
                };
                out.insert(key, yaml_to_json(v)?);
            }
            Value::Object(out)
        }
        Y::Tagged(tagged) => yaml_to_json(&tagged.value)?,
    })
}

/// YAML text for a rule; absent optionals are omitted.
pub fn serialize_rule(rule: &Rule) -> String {
    serde_yaml::to_string(rule).expect("rules always serialize")
}
