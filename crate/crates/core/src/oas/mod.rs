//! In-memory model of a (restricted) OpenAPI 3.x document.
//!
//! The parser resolves local `$ref` pointers, flattens JSON request bodies
//! into one parameter per top-level property and assigns every operation a
//! stable index: document path order, then methods in the order
//! GET, POST, PUT, PATCH, DELETE.

mod parse;
mod schema;
mod validate;

pub use parse::{parse_spec, parse_spec_with_warnings, FormatHint};
pub use schema::{Property, Schema, SchemaKind};
pub use validate::{validate_against_schema, Verdict, Violation};

pub(crate) use validate::json_eq;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum OasError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unsupported OpenAPI version: {0}")]
    UnsupportedVersion(String),
    #[error("document declares no operations")]
    EmptyApi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Post,
    Put,
    Patch,
    Delete,
}

impl HttpMethod {
    pub const ALL: [HttpMethod; 5] = [Self::Get, Self::Post, Self::Put, Self::Patch, Self::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Get => "GET",
            Self::Post => "POST",
            Self::Put => "PUT",
            Self::Patch => "PATCH",
            Self::Delete => "DELETE",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(raw))
    }
}

impl fmt::Display for HttpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamLocation {
    Path,
    Query,
    Header,
    BodyField,
}

impl fmt::Display for ParamLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Path => "path",
            Self::Query => "query",
            Self::Header => "header",
            Self::BodyField => "body-field",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub normalized_name: String,
    pub location: ParamLocation,
    pub required: bool,
    pub schema: Schema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, location: ParamLocation, required: bool, schema: Schema) -> Self {
        let name = name.into();
        Self {
            normalized_name: normalize_name(&name),
            required: required || location == ParamLocation::Path,
            name,
            location,
            schema,
            description: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationSpec {
    pub index: usize,
    pub operation_id: String,
    pub method: HttpMethod,
    pub path: String,
    pub parameters: Vec<ParameterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_body: Option<Schema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Parameter values for one request, keyed by the parameter's position in
/// [`OperationSpec::parameters`].
pub type Arguments = BTreeMap<usize, Value>;

impl OperationSpec {
    pub fn parameter(&self, location: ParamLocation, name: &str) -> Option<(usize, &ParameterSpec)> {
        self.parameters
            .iter()
            .enumerate()
            .find(|(_, p)| p.location == location && p.name == name)
    }

    /// Names of the `{placeholders}` in the path template, in order.
    pub fn path_placeholders(&self) -> Vec<&str> {
        path_placeholders(&self.path)
    }

    /// Validates a full parameter assignment: every present value against
    /// its schema and every required parameter for presence.
    pub fn validate_arguments(&self, args: &Arguments) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, param) in self.parameters.iter().enumerate() {
            match args.get(&i) {
                Some(value) => {
                    for v in validate_against_schema(value, &param.schema).violations {
                        out.push(prefix_violation(v, &param.name));
                    }
                }
                None if param.required => out.push(Violation::MissingParameter {
                    name: param.name.clone(),
                }),
                None => {}
            }
        }
        out
    }
}

fn prefix_violation(v: Violation, name: &str) -> Violation {
    let fix = |path: String| format!("{name}{path}");
    match v {
        Violation::WrongType { path, expected } => Violation::WrongType { path: fix(path), expected },
        Violation::BelowMinimum { path, minimum } => Violation::BelowMinimum { path: fix(path), minimum },
        Violation::AboveMaximum { path, maximum } => Violation::AboveMaximum { path: fix(path), maximum },
        Violation::TooShort { path, min_length } => Violation::TooShort { path: fix(path), min_length },
        Violation::TooLong { path, max_length } => Violation::TooLong { path: fix(path), max_length },
        Violation::NotInEnum { path } => Violation::NotInEnum { path: fix(path) },
        Violation::MissingProperty { path, name: prop } => Violation::MissingProperty { path: fix(path), name: prop },
        Violation::TooFewItems { path, min_items } => Violation::TooFewItems { path: fix(path), min_items },
        Violation::TooManyItems { path, max_items } => Violation::TooManyItems { path: fix(path), max_items },
        other @ Violation::MissingParameter { .. } => other,
    }
}

pub(crate) fn path_placeholders(path: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = path;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else {
            break;
        };
        out.push(&rest[start + 1..start + len]);
        rest = &rest[start + len + 1..];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiModel {
    pub title: String,
    pub base_url: String,
    pub operations: Vec<OperationSpec>,
}

impl ApiModel {
    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    pub fn operation_by_id(&self, operation_id: &str) -> Option<&OperationSpec> {
        self.operations.iter().find(|o| o.operation_id == operation_id)
    }

    pub fn find(&self, method: HttpMethod, path: &str) -> Option<&OperationSpec> {
        self.operations
            .iter()
            .find(|o| o.method == method && o.path == path)
    }
}

/// Canonical parameter identity used for experience sharing: lowercase with
/// every non-alphanumeric character removed.
pub fn normalize_name(raw: &str) -> String {
    let stripped: String = raw
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    if stripped.is_empty() {
        raw.to_lowercase()
    } else {
        stripped
    }
}
