use super::InputError;
use crate::oas::{normalize_name, OperationSpec, ParameterSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

pub const MIN_VALUES_REQUESTED: usize = 20;

/// Loads a dictionary file: a JSON object mapping parameter names to arrays
/// of scalar values. Keys are normalized on load; non-scalar entries are
/// dropped.
pub fn load_dictionary_file(path: &Path) -> Result<BTreeMap<String, Vec<Value>>, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError::LlmDictionary(format!("{}: {e}", path.display())))?;
    parse_dictionary(&text)
}

pub fn parse_dictionary(text: &str) -> Result<BTreeMap<String, Vec<Value>>, InputError> {
    let raw: BTreeMap<String, Vec<Value>> =
        serde_json::from_str(text).map_err(|e| InputError::LlmDictionary(e.to_string()))?;
    let mut out: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for (name, values) in raw {
        let scalars = values.into_iter().filter(is_scalar);
        out.entry(normalize_name(&name)).or_default().extend(scalars);
    }
    out.retain(|_, v| !v.is_empty());
    Ok(out)
}

fn is_scalar(v: &Value) -> bool {
    matches!(v, Value::String(_) | Value::Number(_) | Value::Bool(_))
}

/// Prompt asking for realistic values of one parameter.
pub fn build_prompt(op: &OperationSpec, param: &ParameterSpec) -> String {
    let mut prompt = format!(
        "Generate at least {MIN_VALUES_REQUESTED} realistic values for a parameter of a REST API operation.\n\
         Operation: {} {}\n",
        op.method.as_str(),
        op.path
    );
    if let Some(desc) = &op.description {
        prompt.push_str(&format!("Operation description: {desc}\n"));
    }
    prompt.push_str(&format!("Parameter name: {}\nParameter type: {}\n", param.name, param.schema.kind));
    if let Some(desc) = &param.description {
        prompt.push_str(&format!("Parameter description: {desc}\n"));
    }
    prompt.push_str("Answer with a JSON object {\"values\": [...]}.");
    prompt
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct CompletionResponse {
    values: Vec<Value>,
}

/// Client for a generic completion endpoint answering `{prompt}` with
/// `{values: [...]}`.
#[derive(Debug, Clone)]
pub struct CompletionClient {
    url: String,
    agent: ureq::Agent,
}

impl CompletionClient {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            url: url.into(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    pub fn complete(&self, prompt: &str) -> Result<Vec<Value>, InputError> {
        let response = self
            .agent
            .post(&self.url)
            .send_json(CompletionRequest { prompt })
            .map_err(|e| InputError::LlmDictionary(e.to_string()))?;
        let parsed: CompletionResponse = response
            .into_json()
            .map_err(|e| InputError::LlmDictionary(e.to_string()))?;
        Ok(parsed.values.into_iter().filter(is_scalar).collect())
    }

    /// Queries once per distinct normalized parameter name. Failures leave
    /// that entry absent, which makes the source inapplicable for it.
    pub fn fetch_dictionary(&self, operations: &[OperationSpec]) -> BTreeMap<String, Vec<Value>> {
        let mut out = BTreeMap::new();
        for op in operations {
            for param in &op.parameters {
                if out.contains_key(&param.normalized_name) {
                    continue;
                }
                match self.complete(&build_prompt(op, param)) {
                    Ok(values) if !values.is_empty() => {
                        if values.len() < MIN_VALUES_REQUESTED {
                            log::warn!(
                                "completion endpoint returned {} values for {} (asked for {MIN_VALUES_REQUESTED})",
                                values.len(),
                                param.name
                            );
                        }
                        out.insert(param.normalized_name.clone(), values);
                    }
                    Ok(_) => log::warn!("completion endpoint returned no values for {}", param.name),
                    Err(e) => log::warn!("completion endpoint failed for {}: {e}", param.name),
                }
            }
        }
        out
    }
}
