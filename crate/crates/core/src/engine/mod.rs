//! Pipeline execution: type checking, coercion, localization and ignores.

mod context;
mod report;
mod run;
mod value;

pub use context::{localize, Environment, ExecutionContext, Finding, Policy};
pub use report::{Report, Summary, FORMAT_VERSION};
pub use run::{
    apply_ignores, is_fixable, run_rule, run_rule_with, run_rules, run_rules_with, trace_rule, type_check, HaltReason, Outcome,
    RuleResult, PREVIEW_LIMIT,
};
pub use value::{
    can_coerce, coerce, count_extraction, document_extraction, CoercionError, Diagnostic, Judgment, Match,
    MetricEntry, MetricSummary, PipelineValue, ScopedExtraction, ValueKind, COERCIONS,
};
