use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use restpilot::oas::{parse_spec, FormatHint};
use restpilot::sim::{sim_openapi_yaml, SimApi, SimChain, SimEComm, SimFlaky5xx, SimKind, SimRequest, CATALOG, FLAKY_WINDOW};
use serde_json::{json, Value};

fn post(path: &str, body: Option<Value>) -> SimRequest {
    SimRequest::parse("POST", path, body.map(|b| b.to_string()))
}

fn get(target: &str) -> SimRequest {
    SimRequest::parse("GET", target, None)
}

#[test]
fn documents_parse_back_into_models() {
    for (kind, ops) in [(SimKind::Ecomm, 3), (SimKind::Chain(4), 8), (SimKind::Chain(6), 12), (SimKind::Flaky, 2)] {
        let yaml = sim_openapi_yaml(kind.build(0).as_ref());
        let api = parse_spec(yaml.as_bytes(), FormatHint::Yaml).unwrap();
        assert_eq!(api.len(), ops, "{kind}");
        let again = parse_spec(yaml.as_bytes(), FormatHint::Auto).unwrap();
        assert_eq!(api, again);
    }
    let ecomm = parse_spec(sim_openapi_yaml(&SimEComm::new()).as_bytes(), FormatHint::Yaml).unwrap();
    let ids: Vec<&str> = ecomm.operations.iter().map(|o| o.operation_id.as_str()).collect();
    assert_eq!(ids, ["addProductToCart", "productSearch", "checkout"]);
}

/// Every interleaving of create calls on a 3-stage chain, each sent with a
/// parent id that exists if the oracle says any does: stage k succeeds iff
/// some stage k-1 resource existed before.
#[test]
fn chain_orderings_exhaustive() {
    let n = 3;
    for len in 1..=6u32 {
        for code in 0..3u32.pow(len) {
            let stages: Vec<usize> = (0..len).map(|i| (code / 3u32.pow(i) % 3) as usize).collect();
            let mut sim = SimChain::new(n, 11);
            let mut ids: Vec<Vec<i64>> = vec![vec![]; n];
            for &k in &stages {
                let target = if k == 0 {
                    "/credentials".to_string()
                } else {
                    let parent = ids[k - 1].last().copied().unwrap_or(12345);
                    let field = ["credentialId", "employeeId"][k - 1];
                    format!("/{}?{field}={parent}", ["credentials", "employees", "projects"][k])
                };
                let r = sim.handle(&post(&target, Some(json!({"name": "x"}))));
                let expect_ok = k == 0 || !ids[k - 1].is_empty();
                assert_eq!(r.status == 201, expect_ok, "{stages:?} at stage {k}: {}", r.body);
                if expect_ok {
                    let v: Value = serde_json::from_str(&r.body).unwrap();
                    let field = ["credentialId", "employeeId", "projectId"][k];
                    ids[k].push(v[field].as_i64().unwrap());
                } else {
                    assert_eq!(r.status, 404);
                }
            }
            for k in 0..n {
                assert_eq!(sim.count(k), ids[k].len());
            }
        }
    }
}

#[test]
fn chain_rejects_malformed_creates_and_resets() {
    let mut sim = SimChain::new(4, 3);
    assert_eq!(sim.handle(&post("/credentials", None)).status, 400);
    assert_eq!(sim.handle(&post("/credentials", Some(json!({"name": ""})))).status, 400);
    assert_eq!(sim.handle(&post("/employees", Some(json!({"name": "a"})))).status, 400);
    assert_eq!(sim.handle(&post("/employees?credentialId=abc", Some(json!({"name": "a"})))).status, 400);
    assert_eq!(sim.handle(&SimRequest::parse("DELETE", "/credentials", None)).status, 405);
    assert_eq!(sim.handle(&get("/nowhere")).status, 404);
    let first = sim.handle(&post("/credentials", Some(json!({"name": "a"})))).body;
    assert_eq!(sim.count(0), 1);
    sim.reset();
    assert_eq!(sim.count(0), 0);
    assert_eq!(sim.handle(&post("/credentials", Some(json!({"name": "a"})))).body, first);
}

/// Random operation sequences against a cart model.
#[test]
fn ecomm_matches_cart_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mut sim = SimEComm::new();
        let mut cart: i64 = 0;
        for _ in 0..30 {
            match rng.gen_range(0..3) {
                0 => {
                    let known = rng.gen_bool(0.5);
                    let id = if known { CATALOG[rng.gen_range(0..CATALOG.len())].0 } else { rng.gen_range(0..4000) };
                    let q: i64 = rng.gen_range(-5..120);
                    let r = sim.handle(&post(&format!("/addProductToCart?productId={id}&quantity={q}"), None));
                    let in_range = (1..=100).contains(&q);
                    let expect = if !in_range { 400 } else if known { 200 } else { 404 };
                    assert_eq!(r.status, expect);
                    if expect == 200 {
                        cart += q;
                    }
                }
                1 => {
                    let r = sim.handle(&post("/checkout", None));
                    assert_eq!(r.status, if cart > 0 { 200 } else { 409 });
                    if cart > 0 {
                        let v: Value = serde_json::from_str(&r.body).unwrap();
                        assert_eq!(v["items"], json!(cart));
                    }
                    cart = 0;
                }
                _ => {
                    let r = sim.handle(&get("/products/search?keyword=ad"));
                    assert_eq!(r.status, 200);
                }
            }
            assert_eq!(sim.cart_size() > 0, cart > 0);
        }
    }
}

#[test]
fn ecomm_search_and_defaults() {
    let mut sim = SimEComm::new();
    assert_eq!(sim.handle(&get("/products/search")).status, 400);
    assert_eq!(sim.handle(&get("/products/search?keyword=zzzz")).status, 404);
    let hit = sim.handle(&get("/products/search?keyword=ODYS"));
    assert_eq!(hit.status, 200);
    assert!(hit.body.contains("5023"));
    let r = sim.handle(&post("/addProductToCart?productId=5023", None));
    assert_eq!(r.status, 200);
    assert_eq!(serde_json::from_str::<Value>(&r.body).unwrap()["quantity"], json!(1));
    assert_eq!(sim.purchases(), 0);
    assert_eq!(sim.handle(&post("/checkout", None)).status, 200);
    assert_eq!(sim.purchases(), 1);
}

#[test]
fn flaky_window() {
    let mut sim = SimFlaky5xx::new();
    for v in [0, 199, 200, 500, 800, 801, 999] {
        let r = sim.handle(&get(&format!("/compute?value={v}")));
        assert_eq!(r.status == 200, FLAKY_WINDOW.contains(&v), "value {v}");
    }
    assert_eq!(sim.handle(&get("/status")).status, 200);
}
