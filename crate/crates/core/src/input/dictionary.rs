use serde_json::Value;
use std::collections::{BTreeMap, VecDeque};

pub const DICTIONARY_CAPACITY: usize = 1000;

/// Values observed during the session, keyed by normalized parameter name.
///
/// Response and request dictionaries are bounded ring buffers (oldest value
/// evicted first); the LLM dictionary is fixed at session start.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueDictionaries {
    capacity: usize,
    response: BTreeMap<String, VecDeque<Value>>,
    request: BTreeMap<String, VecDeque<Value>>,
    llm: BTreeMap<String, Vec<Value>>,
}

impl Default for ValueDictionaries {
    fn default() -> Self {
        Self::with_capacity(DICTIONARY_CAPACITY)
    }
}

fn push(map: &mut BTreeMap<String, VecDeque<Value>>, capacity: usize, key: &str, value: Value) {
    let entry = map.entry(key.to_string()).or_default();
    if entry.len() == capacity {
        entry.pop_front();
    }
    entry.push_back(value);
}

impl ValueDictionaries {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            response: BTreeMap::new(),
            request: BTreeMap::new(),
            llm: BTreeMap::new(),
        }
    }

    pub fn record_response(&mut self, key: &str, value: Value) {
        push(&mut self.response, self.capacity, key, value);
    }

    pub fn record_request(&mut self, key: &str, value: Value) {
        push(&mut self.request, self.capacity, key, value);
    }

    pub fn set_llm(&mut self, llm: BTreeMap<String, Vec<Value>>) {
        self.llm = llm;
    }

    pub fn response(&self, key: &str) -> Option<&VecDeque<Value>> {
        self.response.get(key)
    }

    pub fn request(&self, key: &str) -> Option<&VecDeque<Value>> {
        self.request.get(key)
    }

    pub fn llm(&self, key: &str) -> Option<&[Value]> {
        self.llm.get(key).map(Vec::as_slice)
    }

    pub fn last_response(&self, key: &str) -> Option<&Value> {
        self.response.get(key).and_then(VecDeque::back)
    }

    pub fn last_request(&self, key: &str) -> Option<&Value> {
        self.request.get(key).and_then(VecDeque::back)
    }

    pub fn response_keys(&self) -> impl Iterator<Item = &String> {
        self.response.keys()
    }

    pub fn request_keys(&self) -> impl Iterator<Item = &String> {
        self.request.keys()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn last_is_most_recent() {
        let mut d = ValueDictionaries::default();
        d.record_response("productid", json!(17));
        d.record_response("productid", json!(42));
        assert_eq!(d.last_response("productid"), Some(&json!(42)));
        assert_eq!(d.response("productid").unwrap().len(), 2);
        assert!(d.last_request("productid").is_none());
    }

    #[test]
    fn ring_buffer_evicts_oldest() {
        let mut d = ValueDictionaries::with_capacity(3);
        for i in 0..5 {
            d.record_request("k", json!(i));
        }
        let values: Vec<_> = d.request("k").unwrap().iter().cloned().collect();
        assert_eq!(values, vec![json!(2), json!(3), json!(4)]);
    }

    #[test]
    fn duplicates_are_kept() {
        let mut d = ValueDictionaries::default();
        d.record_request("k", json!("a"));
        d.record_request("k", json!("a"));
        assert_eq!(d.request("k").unwrap().len(), 2);
    }
}
