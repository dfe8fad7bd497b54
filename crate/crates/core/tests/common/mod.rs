#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use restpilot::explorer::OutcomeClass;
use restpilot::interaction::{build_request_lenient, execute, Backend, ConcreteRequest, Interaction, InteractionError, RawResponse};
use restpilot::oas::{Arguments, HttpMethod, OperationSpec, ParamLocation, ParameterSpec, Schema};
use serde_json::{json, Value};

/// Replies with whatever status and body it was loaded with.
pub struct Scripted {
    pub status: u16,
    pub body: String,
}

impl Backend for Scripted {
    fn execute(&mut self, _: &ConcreteRequest) -> Result<RawResponse, InteractionError> {
        Ok(RawResponse {
            status: self.status,
            headers: vec![],
            body: self.body.clone(),
        })
    }
}

pub fn interaction(op: &OperationSpec, method: HttpMethod, status: u16, body: &str, seq: u64) -> Interaction {
    let mut request = build_request_lenient(op, &Arguments::new(), &[]);
    request.method = method;
    let mut backend = Scripted {
        status,
        body: body.to_string(),
    };
    let i = execute(&mut backend, request, &op.operation_id, seq);
    assert_eq!(i.outcome, OutcomeClass::from_status(status));
    i
}

pub fn bare_operation(index: usize, method: HttpMethod) -> OperationSpec {
    OperationSpec {
        index,
        operation_id: format!("op{index}"),
        method,
        path: format!("/r{index}"),
        parameters: vec![],
        request_body: None,
        description: None,
    }
}

fn random_scalar_schema<R: Rng>(rng: &mut R) -> Schema {
    match rng.gen_range(0..6) {
        0 => {
            let lo = rng.gen_range(-50i64..50);
            let s = Schema::integer();
            match rng.gen_range(0..4) {
                0 => s,
                1 => s.with_range(Some(lo as f64), None),
                2 => s.with_range(None, Some(lo as f64)),
                _ => s.with_range(Some(lo as f64), Some((lo + rng.gen_range(0..40)) as f64)),
            }
        }
        1 => {
            let lo = rng.gen_range(-10.0..10.0f64);
            Schema::number().with_range(Some(lo), Some(lo + rng.gen_range(0.5..20.0)))
        }
        2 => {
            let min = rng.gen_range(0..4u64);
            let s = Schema::string();
            if rng.gen_bool(0.5) {
                s.with_length(Some(min), Some(min + rng.gen_range(0..6)))
            } else {
                s.with_length(Some(min), None)
            }
        }
        3 => {
            let values: Vec<Value> = ["red", "green", "blue", "amber"][..rng.gen_range(1..5)]
                .iter()
                .map(|v| json!(v))
                .collect();
            Schema::string().with_enum(values)
        }
        4 => Schema::boolean(),
        _ => Schema::integer().with_enum(vec![json!(1), json!(5), json!(9)]),
    }
}

pub fn random_schema<R: Rng>(rng: &mut R, depth: usize) -> Schema {
    if depth == 0 || rng.gen_bool(0.6) {
        return random_scalar_schema(rng);
    }
    if rng.gen_bool(0.5) {
        let min = rng.gen_range(0..3u64);
        Schema::array(random_schema(rng, depth - 1)).with_items_bounds(Some(min), Some(min + rng.gen_range(0..3)))
    } else {
        let n = rng.gen_range(1..4);
        Schema::object((0..n).map(|k| (format!("f{k}"), random_schema(rng, depth - 1), rng.gen_bool(0.5))))
    }
}

pub fn random_operation<R: Rng>(rng: &mut R) -> OperationSpec {
    let method = *HttpMethod::ALL.choose(rng).unwrap();
    let n = rng.gen_range(1..5);
    let parameters = (0..n)
        .map(|k| {
            let location = if matches!(method, HttpMethod::Post | HttpMethod::Put | HttpMethod::Patch) && rng.gen_bool(0.4) {
                ParamLocation::BodyField
            } else {
                ParamLocation::Query
            };
            let schema = random_schema(rng, 2);
            ParameterSpec::new(format!("p{k}"), location, rng.gen_bool(0.5), schema)
        })
        .collect();
    OperationSpec {
        index: 0,
        operation_id: "generated".into(),
        method,
        path: "/generated".into(),
        parameters,
        request_body: None,
        description: None,
    }
}
