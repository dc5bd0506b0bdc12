//! Provider access and the three prompt flows: generate, evaluate, fix.

mod config;
mod flows;
pub mod prompts;
mod provider;

pub use config::{ConfigError, LlmConfig, Mode, ModelInfo, ProviderConfig};
pub use flows::{
    diagnostic_text, evaluate_document, extract_fixed, fix_document, generate_rule, operator_outputs_text,
    parse_line_refs, parse_verdict, strip_fences, Evaluation, FlowError, GeneratedRule, Verdict, VerdictStatus,
};
pub use provider::{prompt_hash, write_exchange, LlmError, PromptExchange, Provider, StubResponse, StubTable};
