use super::InteractionError;
use crate::input::{Decision, ValueSource};
use crate::oas::{Arguments, HttpMethod, OperationSpec, ParamLocation};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;

/// Everything outside the unreserved set of RFC 3986 is escaped.
const COMPONENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

pub fn encode_component(raw: &str) -> String {
    utf8_percent_encode(raw, COMPONENT).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestOrigin {
    Explorer,
    Mutant { operator: String, nominal: bool },
}

impl RequestOrigin {
    pub fn is_mutant(&self) -> bool {
        matches!(self, Self::Mutant { .. })
    }
}

/// A fully materialized HTTP request plus the decisions that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteRequest {
    pub operation: usize,
    pub method: HttpMethod,
    /// Resolved path with every segment value percent-encoded.
    pub path: String,
    /// Unencoded query pairs; array values repeat the key.
    pub query: Vec<(String, String)>,
    pub headers: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Value>,
    pub arguments: Arguments,
    #[serde(default)]
    pub provenance: BTreeMap<usize, ValueSource>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<Decision>,
    pub origin: RequestOrigin,
}

impl ConcreteRequest {
    /// Path plus encoded query string, as sent on the request line.
    pub fn target(&self) -> String {
        if self.query.is_empty() {
            return self.path.clone();
        }
        let query: Vec<String> = self
            .query
            .iter()
            .map(|(k, v)| format!("{}={}", encode_component(k), encode_component(v)))
            .collect();
        format!("{}?{}", self.path, query.join("&"))
    }

    pub fn body_text(&self) -> Option<String> {
        self.body.as_ref().map(Value::to_string)
    }
}

/// Text rendering of a parameter value outside a JSON body.
pub fn scalar_text(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Array(items) => items.iter().map(scalar_text).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

fn header_text(value: &Value) -> String {
    scalar_text(value)
        .chars()
        .map(|c| if c.is_ascii() && !c.is_ascii_control() { c } else { '?' })
        .collect()
}

/// Builds the request for `op` from `args`. Every path placeholder must be
/// assigned.
pub fn build_request(op: &OperationSpec, args: &Arguments, auth: &[(String, String)]) -> Result<ConcreteRequest, InteractionError> {
    assemble(op, args, auth, false)
}

/// Like [`build_request`] but substitutes an empty segment for an absent
/// path parameter, for requests that deliberately omit one.
pub fn build_request_lenient(op: &OperationSpec, args: &Arguments, auth: &[(String, String)]) -> ConcreteRequest {
    assemble(op, args, auth, true).expect("lenient build cannot fail")
}

fn assemble(op: &OperationSpec, args: &Arguments, auth: &[(String, String)], lenient: bool) -> Result<ConcreteRequest, InteractionError> {
    let mut path = String::with_capacity(op.path.len());
    let mut rest = op.path.as_str();
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else {
            break;
        };
        path.push_str(&rest[..start]);
        let name = &rest[start + 1..start + len];
        let value = op
            .parameter(ParamLocation::Path, name)
            .and_then(|(i, _)| args.get(&i));
        match value {
            Some(v) => path.push_str(&encode_component(&scalar_text(v))),
            None if lenient => {}
            None => {
                return Err(InteractionError::MissingPathParameter {
                    operation: op.operation_id.clone(),
                    name: name.to_string(),
                })
            }
        }
        rest = &rest[start + len + 1..];
    }
    path.push_str(rest);

    let mut query = Vec::new();
    let mut headers: Vec<(String, String)> = Vec::new();
    let mut body = Map::new();
    for (&i, value) in args {
        let Some(param) = op.parameters.get(i) else {
            continue;
        };
        match param.location {
            ParamLocation::Path => {}
            ParamLocation::Query => match value {
                Value::Array(items) => {
                    for item in items {
                        query.push((param.name.clone(), scalar_text(item)));
                    }
                }
                Value::Object(_) => query.push((param.name.clone(), value.to_string())),
                _ => query.push((param.name.clone(), scalar_text(value))),
            },
            ParamLocation::Header => headers.push((param.name.clone(), header_text(value))),
            ParamLocation::BodyField => {
                body.insert(param.name.clone(), value.clone());
            }
        }
    }
    for (k, v) in auth {
        headers.retain(|(h, _)| !h.eq_ignore_ascii_case(k));
        headers.push((k.clone(), v.clone()));
    }
    let body = (op.request_body.is_some() || !body.is_empty()).then_some(Value::Object(body));
    Ok(ConcreteRequest {
        operation: op.index,
        method: op.method,
        path,
        query,
        headers,
        body,
        arguments: args.clone(),
        provenance: BTreeMap::new(),
        trace: Vec::new(),
        origin: RequestOrigin::Explorer,
    })
}
