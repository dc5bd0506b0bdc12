use serde::Serialize;
use serde_json::{json, Map, Value};

/// Shape of an operator parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldType {
    String,
    Integer,
    Number,
    Boolean,
    /// A string restricted to the listed values.
    Enum(Vec<&'static str>),
    /// A string that must compile as a regular expression.
    Regex,
    Array(Box<FieldType>),
    Object(Vec<FieldSchema>),
    /// Index of an earlier pipeline step (0-based) or the literal `document`.
    StepRef,
}

impl FieldType {
    pub fn name(&self) -> &'static str {
        match self {
            FieldType::String | FieldType::Regex | FieldType::Enum(_) => "string",
            FieldType::Integer => "integer",
            FieldType::Number => "number",
            FieldType::Boolean => "boolean",
            FieldType::Array(_) => "array",
            FieldType::Object(_) => "object",
            FieldType::StepRef => "stepRef",
        }
    }

    /// Human-readable expected shape, used in violation messages.
    pub fn describe(&self) -> String {
        match self {
            FieldType::Enum(values) => format!("one of: {}", values.join(", ")),
            FieldType::Regex => "regular expression string".into(),
            FieldType::Array(item) => format!("list of {}", item.describe()),
            FieldType::Object(fields) => {
                let names: Vec<_> = fields.iter().map(|f| f.name.as_str()).collect();
                format!("mapping with keys: {}", names.join(", "))
            }
            FieldType::StepRef => "earlier step index (0-based) or `document`".into(),
            other => other.name().into(),
        }
    }

    fn json_schema(&self) -> Value {
        match self {
            FieldType::Enum(values) => json!({ "type": "string", "enum": values }),
            FieldType::Regex => json!({ "type": "string", "format": "regex" }),
            FieldType::Array(item) => json!({ "type": "array", "items": item.json_schema() }),
            FieldType::Object(fields) => {
                let mut props = Map::new();
                for f in fields {
                    props.insert(f.name.clone(), f.json_schema());
                }
                let required: Vec<_> = fields.iter().filter(|f| f.required()).map(|f| &f.name).collect();
                json!({
                    "type": "object",
                    "properties": props,
                    "required": required,
                    "additionalProperties": false,
                })
            }
            FieldType::StepRef => json!({
                "oneOf": [
                    { "type": "integer", "minimum": 0 },
                    { "const": "document" }
                ]
            }),
            other => json!({ "type": other.name() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSchema {
    pub name: String,
    pub ty: FieldType,
    /// `None` marks the field as required.
    pub default: Option<Value>,
    pub description: String,
}

impl FieldSchema {
    pub fn required(&self) -> bool {
        self.default.is_none()
    }

    pub fn enum_values(&self) -> Option<&[&'static str]> {
        match &self.ty {
            FieldType::Enum(v) => Some(v),
            FieldType::Array(item) => match item.as_ref() {
                FieldType::Enum(v) => Some(v),
                _ => None,
            },
            _ => None,
        }
    }

    fn json_schema(&self) -> Value {
        let mut schema = self.ty.json_schema();
        let obj = schema.as_object_mut().expect("field schemas are objects");
        obj.insert("description".into(), Value::String(self.description.clone()));
        if let Some(default) = &self.default {
            obj.insert("default".into(), default.clone());
        }
        schema
    }
}

impl Serialize for FieldSchema {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut out = Map::new();
        out.insert("name".into(), Value::String(self.name.clone()));
        out.insert("type".into(), Value::String(self.ty.name().into()));
        if let Some(values) = self.enum_values() {
            out.insert("enum".into(), json!(values));
        }
        if let FieldType::Array(item) = &self.ty {
            out.insert("items".into(), Value::String(item.name().into()));
        }
        if let FieldType::Object(fields) = &self.ty {
            out.insert("fields".into(), serde_json::to_value(fields).map_err(serde::ser::Error::custom)?);
        }
        if let Some(default) = &self.default {
            out.insert("default".into(), default.clone());
        }
        out.insert("required".into(), Value::Bool(self.required()));
        out.insert("description".into(), Value::String(self.description.clone()));
        out.serialize(s)
    }
}

/// A cross-field problem found by an operator-specific check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

pub type ParamCheck = fn(&Map<String, Value>) -> Vec<FieldIssue>;

/// Catalog entry describing one operator and its parameters.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OperatorSchema {
    pub id: String,
    pub description: String,
    /// Input and output value kinds, e.g. `Extraction -> Metrics`.
    pub signature: String,
    pub allowed_fields: Vec<String>,
    pub fields: Vec<FieldSchema>,
    pub examples: Vec<String>,
    #[serde(skip)]
    pub check: Option<ParamCheck>,
}

impl OperatorSchema {
    pub fn new(
        id: &str,
        description: &str,
        signature: &str,
        fields: Vec<FieldSchema>,
        examples: &[&str],
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            signature: signature.into(),
            allowed_fields: fields.iter().map(|f| f.name.clone()).collect(),
            fields,
            examples: examples.iter().map(|e| e.trim_end().to_string() + "\n").collect(),
            check: None,
        }
    }

    pub fn with_check(mut self, check: ParamCheck) -> Self {
        self.check = Some(check);
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldSchema> {
        self.fields.iter().find(|f| f.name == name)
    }
}

pub fn field(name: &str, ty: FieldType, default: Option<Value>, description: &str) -> FieldSchema {
    FieldSchema {
        name: name.into(),
        ty,
        default,
        description: description.into(),
    }
}

/// Renders the catalog as one JSON Schema document for rule files. Each
/// operator gets a definition under `$defs` carrying field descriptions,
/// defaults, enums and examples.
pub fn export_catalog(catalog: &[OperatorSchema]) -> Value {
    let mut defs = Map::new();
    let mut refs = Vec::new();
    for op in catalog {
        let mut props = Map::new();
        props.insert(
            "operator".into(),
            json!({ "const": op.id, "description": op.description }),
        );
        for f in &op.fields {
            props.insert(f.name.clone(), f.json_schema());
        }
        let mut required = vec![Value::String("operator".into())];
        required.extend(op.fields.iter().filter(|f| f.required()).map(|f| Value::String(f.name.clone())));
        defs.insert(
            op.id.clone(),
            json!({
                "type": "object",
                "description": op.description,
                "x-signature": op.signature,
                "x-allowedFields": op.allowed_fields,
                "properties": props,
                "required": required,
                "additionalProperties": false,
                "examples": op.examples,
            }),
        );
        refs.push(json!({ "$ref": format!("#/$defs/{}", op.id) }));
    }
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "Lint rule",
        "type": "object",
        "required": ["rule", "description", "pipeline"],
        "properties": {
            "rule": { "type": "string", "minLength": 1, "description": "Rule name, kebab-case or camelCase." },
            "description": { "type": "string", "description": "What the rule checks." },
            "severity": { "type": "string", "enum": ["error", "warning", "info"], "default": "error" },
            "pipeline": {
                "type": "array",
                "minItems": 1,
                "description": "Operators run in order; each consumes the previous step's output.",
                "items": { "oneOf": refs }
            }
        },
        "$defs": defs,
    })
}

/// The catalog in the id/description/allowedFields/fields/examples layout
/// used by the rule-generation prompt.
pub fn catalog_prompt_text(catalog: &[OperatorSchema]) -> String {
    #[derive(Serialize)]
    #[serde(rename_all = "camelCase")]
    struct Entry<'a> {
        id: &'a str,
        description: &'a str,
        allowed_fields: &'a [String],
        fields: &'a [FieldSchema],
        examples: &'a [String],
    }
    let entries: Vec<Entry> = catalog
        .iter()
        .map(|op| Entry {
            id: &op.id,
            description: &op.description,
            allowed_fields: &op.allowed_fields,
            fields: &op.fields,
            examples: &op.examples,
        })
        .collect();
    serde_yaml::to_string(&entries).expect("catalog serializes")
}
