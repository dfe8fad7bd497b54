use super::Interaction;
use crate::input::ValueDictionaries;
use crate::oas::{normalize_name, OperationSpec};
use serde_json::Value;

/// Every (normalized key, scalar) pair found under an object key anywhere in
/// `value`, in document order. Scalars inside arrays are attributed to the
/// key holding the array.
pub fn flatten_leaves(value: &Value) -> Vec<(String, Value)> {
    let mut out = Vec::new();
    walk(None, value, &mut out);
    out
}

fn walk(key: Option<&str>, value: &Value, out: &mut Vec<(String, Value)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                walk(Some(k), v, out);
            }
        }
        Value::Array(items) => {
            for item in items {
                walk(key, item, out);
            }
        }
        Value::Null => {}
        scalar => {
            if let Some(k) = key {
                out.push((normalize_name(k), scalar.clone()));
            }
        }
    }
}

/// Feeds a successful exchange into the dictionaries. Response leaves always
/// go in; request values only when `record_request` is set. Anything other
/// than a 2xx leaves the dictionaries untouched.
pub fn harvest(interaction: &Interaction, op: &OperationSpec, dictionaries: &mut ValueDictionaries, record_request: bool) {
    if !interaction.is_success() {
        return;
    }
    let body = interaction.response_body.trim();
    if !body.is_empty() {
        match serde_json::from_str::<Value>(body) {
            Ok(json) => {
                for (key, value) in flatten_leaves(&json) {
                    dictionaries.record_response(&key, value);
                }
            }
            Err(e) => ::log::warn!("seq {}: response body is not JSON ({e}); not harvested", interaction.seq),
        }
    }
    if !record_request {
        return;
    }
    for (&i, value) in &interaction.request.arguments {
        let Some(param) = op.parameters.get(i) else {
            continue;
        };
        dictionaries.record_request(&param.normalized_name, value.clone());
        match value {
            Value::Object(_) => {
                for (key, leaf) in flatten_leaves(value) {
                    dictionaries.record_request(&key, leaf);
                }
            }
            Value::Array(items) => {
                for item in items.iter().filter(|v| !(v.is_array() || v.is_object() || v.is_null())) {
                    dictionaries.record_request(&param.normalized_name, item.clone());
                }
            }
            _ => {}
        }
    }
}
