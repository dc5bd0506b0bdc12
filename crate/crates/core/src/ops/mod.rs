//! The built-in operator catalog.

mod compare;
mod exec;
mod extract;
mod github;
mod links;
mod llm_ops;
mod metrics;
mod script;
mod text;

use std::borrow::Cow;
use std::sync::LazyLock;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::dsl::OperatorSchema;
use crate::engine::{ExecutionContext, PipelineValue, ValueKind};
use crate::md::Document;

pub use compare::{similarity, SimilarityMethod};
pub use extract::{github_slug, PATTERN_TARGETS};
pub use metrics::Comparator;

pub type Params = Map<String, Value>;

/// What an operator accepts from its predecessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputDecl {
    pub accepts: &'static [ValueKind],
    /// A step with nothing before it cannot run.
    pub needs_predecessor: bool,
    /// Whether the coercion matrix may be applied to the predecessor.
    pub coercible: bool,
}

impl InputDecl {
    /// Reads the document (or a predecessor document) and ignores other inputs.
    pub const SOURCE: InputDecl = InputDecl {
        accepts: &ValueKind::ALL,
        needs_predecessor: false,
        coercible: false,
    };

    pub fn accepts(&self, kind: ValueKind) -> bool {
        self.accepts.contains(&kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("configuration error: {0}")]
    Config(String),
    /// Disallowed by the environment policy; the rule is skipped.
    #[error("{0}")]
    Disabled(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("{0}")]
    Failed(String),
}

pub trait Operator: Send + Sync {
    fn schema(&self) -> OperatorSchema;

    fn input(&self, params: &Params) -> InputDecl;

    /// Output kind given the predecessor's kind; `None` when only known at
    /// run time.
    fn output(&self, params: &Params, input: Option<ValueKind>) -> Option<ValueKind>;

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError>;

    /// Operators that forward their input unchanged do not re-emit its
    /// diagnostics.
    fn passthrough(&self) -> bool {
        false
    }
}

/// Registry of operators by id.
pub struct Catalog {
    ops: Vec<Box<dyn Operator>>,
    schemas: Vec<OperatorSchema>,
}

static BUILTIN: LazyLock<Catalog> = LazyLock::new(Catalog::standard);

impl Catalog {
    /// A fresh copy of the built-in operators, open to extension.
    pub fn standard() -> Self {
        let mut c = Catalog::empty();
        c.register(Box::new(extract::Extract));
        c.register(Box::new(metrics::Count));
        c.register(Box::new(metrics::Length));
        c.register(Box::new(metrics::Threshold));
        c.register(Box::new(text::RegexMatch));
        c.register(Box::new(text::Search));
        c.register(Box::new(compare::Compare));
        c.register(Box::new(links::IsLinkAlive));
        c.register(Box::new(exec::Execute));
        c.register(Box::new(script::CustomCode));
        c.register(Box::new(github::FetchFromGithub));
        c.register(Box::new(llm_ops::EvaluateUsingLlm));
        c.register(Box::new(llm_ops::FixUsingLlm));
        c
    }

    pub fn empty() -> Self {
        Self {
            ops: Vec::new(),
            schemas: Vec::new(),
        }
    }

    pub fn builtin() -> &'static Catalog {
        &BUILTIN
    }

    /// Adds an operator, replacing any existing one with the same id.
    pub fn register(&mut self, op: Box<dyn Operator>) {
        let schema = op.schema();
        if let Some(i) = self.schemas.iter().position(|s| s.id == schema.id) {
            self.ops[i] = op;
            self.schemas[i] = schema;
        } else {
            self.ops.push(op);
            self.schemas.push(schema);
        }
    }

    pub fn get(&self, id: &str) -> Option<&dyn Operator> {
        self.schemas.iter().position(|s| s.id == id).map(|i| self.ops[i].as_ref())
    }

    pub fn schemas(&self) -> &[OperatorSchema] {
        &self.schemas
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.schemas.iter().map(|s| s.id.as_str())
    }
}

/// Deserializes step parameters into an operator's typed config. Nulls are
/// treated as absent so defaults apply.
pub(crate) fn parse_params<T: DeserializeOwned>(params: &Params) -> Result<T, OpError> {
    let cleaned: Map<String, Value> = params
        .iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    serde_json::from_value(Value::Object(cleaned)).map_err(|e| OpError::Config(e.to_string()))
}

/// The document a source operator reads: a predecessor document (such as
/// fetched content) when there is one, else the rule's input.
pub(crate) fn source_doc<'c>(ctx: &'c ExecutionContext, input: Option<&PipelineValue>) -> Cow<'c, Document> {
    match input {
        Some(PipelineValue::Document(text)) => Cow::Owned(Document::new(text.as_str())),
        _ => Cow::Borrowed(ctx.doc),
    }
}

pub(crate) fn ms(value: u64) -> std::time::Duration {
    std::time::Duration::from_millis(value)
}
