use serde::Serialize;

use super::run::{Outcome, RuleResult};
use crate::dsl::Severity;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub errors: usize,
    pub warnings: usize,
    pub infos: usize,
    pub skipped: usize,
    pub incomplete: usize,
    /// Halted or errored rules.
    pub internal_errors: usize,
}

impl Summary {
    pub fn tally(results: &[RuleResult]) -> Self {
        let mut s = Summary::default();
        for r in results {
            match r.outcome {
                Outcome::Skipped => s.skipped += 1,
                Outcome::Incomplete => s.incomplete += 1,
                Outcome::Halted | Outcome::Errored => s.internal_errors += 1,
                Outcome::Pass | Outcome::Fail => {}
            }
            for d in &r.diagnostics {
                match d.severity {
                    Severity::Error => s.errors += 1,
                    Severity::Warning => s.warnings += 1,
                    Severity::Info => s.infos += 1,
                }
            }
        }
        s
    }
}

/// The lint report for one document.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub format_version: u32,
    pub document_path: String,
    pub corpus_version: String,
    pub rule_results: Vec<RuleResult>,
    pub summary: Summary,
    /// Problems with the rule selection itself, such as unknown rule names.
    pub config_errors: Vec<String>,
}

impl Report {
    pub fn new(document_path: &str, corpus_version: &str, rule_results: Vec<RuleResult>, config_errors: Vec<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            document_path: document_path.into(),
            corpus_version: corpus_version.into(),
            summary: Summary::tally(&rule_results),
            rule_results,
            config_errors,
        }
    }

    /// 2 for configuration or internal errors, 1 for error-severity
    /// diagnostics, else 0.
    pub fn exit_code(&self) -> i32 {
        if !self.config_errors.is_empty() || self.summary.internal_errors > 0 {
            2
        } else if self.summary.errors > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn result(&self, rule: &str) -> Option<&RuleResult> {
        let key = crate::naming::canonical_rule_name(rule);
        self.rule_results.iter().find(|r| r.rule_name == key)
    }
}
