use super::{error_response, json_response, parse_int, route_error, SimApi, SimRequest};
use crate::interaction::RawResponse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;

pub const DEFAULT_CHAIN_LENGTH: usize = 4;

const NAMED_STAGES: [(&str, &str); 4] = [
    ("credentials", "credential"),
    ("employees", "employee"),
    ("projects", "project"),
    ("assignments", "assignment"),
];

/// Resource collection `k` of the chain: (collection path segment, singular).
fn stage_names(n: usize, k: usize) -> (String, String) {
    if n <= NAMED_STAGES.len() {
        let (plural, singular) = NAMED_STAGES[k];
        (plural.to_string(), singular.to_string())
    } else {
        (format!("stage{k}s"), format!("stage{k}"))
    }
}

/// A sequence of resources where creating one of stage `k` needs the id of
/// an existing stage `k - 1` resource. Ids are 63-bit draws from a seeded
/// stream, so they cannot be guessed and repeat after a reset.
///
/// Each stage exposes `POST /{plural}` (create) and `GET /{plural}` (list).
#[derive(Debug, Clone)]
pub struct SimChain {
    seed: u64,
    rng: ChaCha8Rng,
    stages: Vec<(String, String)>,
    /// ids per stage, in creation order
    stores: Vec<BTreeSet<i64>>,
}

impl PartialEq for SimChain {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stages == other.stages && self.stores == other.stores && self.rng == other.rng
    }
}

impl SimChain {
    pub fn new(n: usize, seed: u64) -> Self {
        assert!(n >= 1, "chain needs at least one stage");
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stages: (0..n).map(|k| stage_names(n, k)).collect(),
            stores: vec![BTreeSet::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn count(&self, stage: usize) -> usize {
        self.stores[stage].len()
    }

    /// Operation id of the create operation of `stage`.
    pub fn create_operation_id(&self, stage: usize) -> String {
        let singular = &self.stages[stage].1;
        let mut chars = singular.chars();
        let first = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or_default();
        format!("create{first}{}", chars.as_str())
    }

    fn id_field(&self, stage: usize) -> String {
        format!("{}Id", self.stages[stage].1)
    }

    fn fresh_id(&mut self) -> i64 {
        loop {
            let id = self.rng.gen_range(1..=i64::MAX);
            if !self.stores.iter().any(|s| s.contains(&id)) {
                return id;
            }
        }
    }

    fn create(&mut self, stage: usize, req: &SimRequest) -> RawResponse {
        let name = match req.json_body() {
            Some(Value::Object(body)) => match body.get("name") {
                Some(Value::String(s)) if !s.is_empty() => s.clone(),
                Some(_) => return error_response(400, "name must be a non-empty string"),
                None => return error_response(400, "name is required"),
            },
            _ => return error_response(400, "JSON object body required"),
        };
        if stage > 0 {
            let field = self.id_field(stage - 1);
            let parent = match parse_int(req.query_value(&field)) {
                Ok(Some(id)) => id,
                Ok(None) => return error_response(400, &format!("{field} is required")),
                Err(()) => return error_response(400, &format!("{field} must be an integer")),
            };
            if !self.stores[stage - 1].contains(&parent) {
                return error_response(404, &format!("{field} does not exist"));
            }
        }
        let id = self.fresh_id();
        self.stores[stage].insert(id);
        let mut out = Map::new();
        out.insert(self.id_field(stage), json!(id));
        out.insert("name".into(), json!(name));
        json_response(201, &Value::Object(out))
    }

    fn list(&self, stage: usize) -> RawResponse {
        let field = self.id_field(stage);
        let items: Vec<Value> = self.stores[stage].iter().map(|id| json!({ field.clone(): id })).collect();
        json_response(200, &Value::Array(items))
    }
}

impl SimApi for SimChain {
    fn handle(&mut self, req: &SimRequest) -> RawResponse {
        let stage = self
            .stages
            .iter()
            .position(|(plural, _)| req.path.strip_prefix('/') == Some(plural.as_str()));
        match (stage, req.method.as_str()) {
            (Some(k), "POST") => self.create(k, req),
            (Some(k), "GET") => self.list(k),
            (known, _) => route_error(known.is_some()),
        }
    }

    fn reset(&mut self) {
        *self = Self::new(self.len(), self.seed);
    }

    fn openapi(&self) -> Value {
        let mut paths = Map::new();
        for k in 0..self.len() {
            let (plural, singular) = &self.stages[k];
            let mut parameters = Vec::new();
            if k > 0 {
                parameters.push(json!({
                    "name": self.id_field(k - 1), "in": "query", "required": true,
                    "schema": {"type": "integer", "format": "int64"}
                }));
            }
            let mut item = Map::new();
            item.insert(self.id_field(k), json!({"type": "integer", "format": "int64"}));
            item.insert("name".into(), json!({"type": "string"}));
            paths.insert(
                format!("/{plural}"),
                json!({
                    "get": {
                        "operationId": format!("list{}", capitalize(plural)),
                        "summary": format!("List {plural}"),
                        "responses": {"200": {"description": "All stored resources", "content": {"application/json": {
                            "schema": {"type": "array", "items": {"type": "object", "properties": {
                                self.id_field(k): {"type": "integer", "format": "int64"}
                            }}}
                        }}}}
                    },
                    "post": {
                        "operationId": self.create_operation_id(k),
                        "summary": format!("Create a {singular}"),
                        "parameters": parameters,
                        "requestBody": {"required": true, "content": {"application/json": {"schema": {
                            "type": "object", "required": ["name"],
                            "properties": {"name": {"type": "string", "minLength": 1}}
                        }}}},
                        "responses": {"201": {"description": "Created", "content": {"application/json": {
                            "schema": {"type": "object", "properties": item}
                        }}}}
                    }
                }),
            );
        }
        json!({
            "openapi": "3.0.0",
            "info": {"version": "1.0.0", "title": "Project Tracking"},
            "servers": [{"url": "http://localhost:8080"}],
            "paths": paths
        })
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    chars
        .next()
        .map(|c| c.to_ascii_uppercase().to_string() + chars.as_str())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(sim: &mut SimChain, target: &str) -> RawResponse {
        sim.handle(&SimRequest::parse("POST", target, Some(r#"{"name":"x"}"#.into())))
    }

    fn id(r: &RawResponse, field: &str) -> i64 {
        serde_json::from_str::<Value>(&r.body).unwrap()[field].as_i64().unwrap()
    }

    #[test]
    fn four_stage_chain() {
        let mut sim = SimChain::new(4, 7);
        let c = post(&mut sim, "/credentials");
        assert_eq!(c.status, 201);
        let cid = id(&c, "credentialId");
        assert_eq!(post(&mut sim, "/employees?credentialId=12345").status, 404);
        let e = post(&mut sim, &format!("/employees?credentialId={cid}"));
        assert_eq!(e.status, 201);
        let eid = id(&e, "employeeId");
        let p = post(&mut sim, &format!("/projects?employeeId={eid}"));
        let pid = id(&p, "projectId");
        assert_eq!(post(&mut sim, &format!("/assignments?projectId={pid}")).status, 201);
        assert_eq!(post(&mut sim, &format!("/assignments?projectId={eid}")).status, 404);
        assert_eq!(post(&mut sim, "/assignments").status, 400);
        assert_eq!(sim.create_operation_id(3), "createAssignment");
    }

    #[test]
    fn body_is_checked() {
        let mut sim = SimChain::new(4, 1);
        let bad = sim.handle(&SimRequest::parse("POST", "/credentials", Some("{}".into())));
        assert_eq!(bad.status, 400);
        let bad = sim.handle(&SimRequest::parse("POST", "/credentials", None));
        assert_eq!(bad.status, 400);
        assert_eq!(sim.handle(&SimRequest::parse("DELETE", "/credentials", None)).status, 405);
    }

    #[test]
    fn reset_regenerates_same_ids() {
        let mut sim = SimChain::new(4, 99);
        let first = id(&post(&mut sim, "/credentials"), "credentialId");
        sim.reset();
        assert_eq!(sim, SimChain::new(4, 99));
        assert_eq!(id(&post(&mut sim, "/credentials"), "credentialId"), first);
        assert_ne!(SimChain::new(4, 100).fresh_id(), SimChain::new(4, 99).fresh_id());
    }

    #[test]
    fn generic_names_beyond_four() {
        let sim = SimChain::new(6, 0);
        assert_eq!(sim.stages[5].0, "stage5s");
        assert_eq!(sim.id_field(2), "stage2Id");
    }
}
