//! Prompt templates and slot filling.

pub const GENERATE_SYSTEM: &str = include_str!("../../prompts/generate_system.txt");
pub const GENERATE_USER: &str = include_str!("../../prompts/generate_user.txt");
pub const FIX_SYSTEM: &str = include_str!("../../prompts/fix.txt");
pub const EVALUATE_SYSTEM: &str = include_str!("../../prompts/evaluate.txt");

/// Separates the fixed document from anything the model says before it.
pub const FIX_MARKER: &str = "---FIXED MARKDOWN BELOW---";

/// Per-step cap on intermediate outputs embedded in the evaluate prompt.
pub const STEP_OUTPUT_LIMIT: usize = 8 * 1024;

/// Fills `{slot}` placeholders in one left-to-right pass, so slot-like text
/// inside substituted values is left alone.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in slots {
            let key = format!("{{{name}}}");
            if tail.starts_with(&key) {
                out.push_str(value);
                rest = &tail[key.len()..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

pub fn generate_system(catalog_text: &str) -> String {
    fill(GENERATE_SYSTEM, &[("catalog", catalog_text)])
}

pub fn generate_user(idea: &str) -> String {
    fill(GENERATE_USER, &[("idea", idea)])
}

pub fn fix_system(rule_yaml: &str, prompt: &str, diagnostic_text: &str, markdown: &str) -> String {
    fill(
        FIX_SYSTEM,
        &[
            ("ruleYaml", rule_yaml),
            ("prompt", prompt),
            ("diagnosticText", diagnostic_text),
            ("ctx.markdown", markdown),
        ],
    )
}

pub fn evaluate_system(rule_yaml: &str, operator_outputs: &str, diagnostic_text: &str, markdown: &str) -> String {
    fill(
        EVALUATE_SYSTEM,
        &[
            ("ruleYaml", rule_yaml),
            ("operatorOutputs", operator_outputs),
            ("diagnosticText", diagnostic_text),
            ("ctx.markdown", markdown),
        ],
    )
}
