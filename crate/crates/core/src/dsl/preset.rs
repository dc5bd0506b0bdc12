use serde::{Deserialize, Serialize};

use super::violation::{Violation, ViolationKind};
use crate::naming::canonical_rule_name;

/// A named bundle of rule names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub rules: Vec<String>,
}

impl Preset {
    pub fn new(name: &str, rules: &[&str]) -> Self {
        Self {
            name: name.into(),
            description: None,
            rules: rules.iter().map(|r| r.to_string()).collect(),
        }
    }
}

pub fn parse_preset(yaml: &str) -> Result<Preset, Vec<Violation>> {
    let preset: Preset = serde_yaml::from_str(yaml).map_err(|e| {
        let mut v = Violation::new(ViolationKind::Schema, "$", format!("invalid preset: {e}"))
            .expected("mapping with keys name, rules");
        if let Some(loc) = e.location() {
            v = v.line(loc.line());
        }
        vec![v]
    })?;
    let mut violations = Vec::new();
    if preset.name.trim().is_empty() {
        violations.push(Violation::new(ViolationKind::Schema, "$.name", "preset name must not be empty").field("name"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, rule) in preset.rules.iter().enumerate() {
        if !seen.insert(canonical_rule_name(rule)) {
            violations.push(
                Violation::new(
                    ViolationKind::DuplicateName,
                    format!("$.rules[{i}]"),
                    format!("rule `{rule}` is listed twice"),
                )
                .field("rules"),
            );
        }
    }
    if violations.is_empty() {
        Ok(preset)
    } else {
        Err(violations)
    }
}
