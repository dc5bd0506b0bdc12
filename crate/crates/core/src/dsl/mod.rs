//! Rule and preset files: parsing, validation against the operator
//! catalog, serialization and schema export.

mod preset;
mod rule;
mod schema;
mod validate;
mod violation;

pub use preset::{parse_preset, Preset};
pub use rule::{serialize_rule, OperatorStep, Rule, RuleParse, Severity};
pub use schema::{
    catalog_prompt_text, export_catalog, field, FieldIssue, FieldSchema, FieldType, OperatorSchema, ParamCheck,
};
pub use validate::{parse_rule, parse_rule_with, parse_rules_with, validate_rule};
pub use violation::{Violation, ViolationKind};

/// Parses every rule document in `yaml` against the built-in catalog.
pub fn parse_rules(yaml: &str) -> Vec<RuleParse> {
    parse_rules_with(yaml, crate::ops::Catalog::builtin().schemas())
}
