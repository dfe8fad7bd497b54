use super::{error_response, json_response, parse_int, route_error, SimApi, SimRequest};
use crate::interaction::RawResponse;
use serde_json::{json, Value};
use std::ops::RangeInclusive;

/// Values the compute endpoint handles; everything else in the documented
/// range crashes it.
pub const FLAKY_WINDOW: RangeInclusive<i64> = 200..=800;

/// One endpoint with a hidden crash region. The crash message embeds the
/// input and a derived address, so distinct inputs give textually distinct
/// but structurally identical bodies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimFlaky5xx;

impl SimFlaky5xx {
    pub fn new() -> Self {
        Self
    }

    fn compute(&self, req: &SimRequest) -> RawResponse {
        let value = match parse_int(req.query_value("value")) {
            Ok(Some(v)) => v,
            Ok(None) => return error_response(400, "value is required"),
            Err(()) => return error_response(400, "value must be an integer"),
        };
        if !(0..=1000).contains(&value) {
            return error_response(400, "value out of range");
        }
        if !FLAKY_WINDOW.contains(&value) {
            let address = 0x7f00_0000_u64 + value as u64 * 0x9e37;
            return RawResponse {
                status: 500,
                headers: vec![("Content-Type".into(), "text/plain".into())],
                body: format!(
                    "java.lang.ArithmeticException: overflow computing 'value={value}'\n    \
                     at engine.Compute.scale(Compute.java:{})\n    at 0x{address:012x}",
                    100 + value % 37
                ),
            };
        }
        json_response(200, &json!({"value": value, "result": value * 2}))
    }
}

impl SimApi for SimFlaky5xx {
    fn handle(&mut self, req: &SimRequest) -> RawResponse {
        match (req.path.as_str(), req.method.as_str()) {
            ("/compute", "GET") => self.compute(req),
            ("/status", "GET") => json_response(200, &json!({"status": "up"})),
            (path, _) => route_error(matches!(path, "/compute" | "/status")),
        }
    }

    fn reset(&mut self) {}

    fn openapi(&self) -> Value {
        json!({
            "openapi": "3.0.0",
            "info": {"version": "1.0.0", "title": "Compute Service"},
            "servers": [{"url": "http://localhost:8080"}],
            "paths": {
                "/compute": {"get": {
                    "operationId": "compute",
                    "parameters": [{"name": "value", "in": "query", "required": true,
                                    "schema": {"type": "integer", "minimum": 0, "maximum": 1000}}],
                    "responses": {"200": {"description": "Result"}}
                }},
                "/status": {"get": {
                    "operationId": "status",
                    "responses": {"200": {"description": "Health"}}
                }}
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_window() {
        let mut sim = SimFlaky5xx::new();
        let mut call = |v: &str| sim.handle(&SimRequest::parse("GET", &format!("/compute?value={v}"), None));
        assert_eq!(call("500").status, 200);
        assert_eq!(call("200").status, 200);
        assert_eq!(call("800").status, 200);
        let a = call("17");
        let b = call("950");
        assert_eq!((a.status, b.status), (500, 500));
        assert_ne!(a.body, b.body);
        assert_eq!(call("1001").status, 400);
        assert_eq!(call("x").status, 400);
        assert_eq!(a.body, call("17").body);
    }
}
