use super::{error_response, json_response, parse_int, route_error, SimApi, SimRequest};
use crate::interaction::RawResponse;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// (productId, name, price). Ids are far outside the range a blind draw for
/// an unconstrained integer would produce.
pub const CATALOG: [(i64, &str, f64); 8] = [
    (4711, "Iliad", 9.5),
    (5023, "Odyssey", 11.0),
    (6158, "Aeneid", 8.25),
    (7342, "Beowulf", 6.75),
    (8016, "Inferno", 12.5),
    (8867, "Metamorphoses", 14.0),
    (9234, "Decameron", 10.0),
    (9781, "Oresteia", 7.5),
];

const QUANTITY_MIN: i64 = 1;
const QUANTITY_MAX: i64 = 100;

/// Product search, cart and checkout. Checkout only succeeds on a non-empty
/// cart, a rule the published description does not mention.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimEComm {
    /// productId → quantity
    cart: BTreeMap<i64, i64>,
    purchases: u64,
}

impl SimEComm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cart_size(&self) -> usize {
        self.cart.len()
    }

    pub fn purchases(&self) -> u64 {
        self.purchases
    }

    fn search(&self, req: &SimRequest) -> RawResponse {
        let Some(keyword) = req.query_value("keyword") else {
            return error_response(400, "keyword is required");
        };
        let needle = keyword.to_lowercase();
        let hits: Vec<Value> = CATALOG
            .iter()
            .filter(|(_, name, _)| name.to_lowercase().contains(&needle))
            .map(|(id, name, price)| json!({"productId": id, "name": name, "price": price}))
            .collect();
        if hits.is_empty() {
            return error_response(404, "no product matches the keyword");
        }
        json_response(200, &Value::Array(hits))
    }

    fn add(&mut self, req: &SimRequest) -> RawResponse {
        let Ok(id) = parse_int(req.query_value("productId")) else {
            return error_response(400, "productId must be an integer");
        };
        let Some(id) = id else {
            return error_response(400, "productId is required");
        };
        let quantity = match parse_int(req.query_value("quantity")) {
            Ok(q) => q.unwrap_or(1),
            Err(()) => return error_response(400, "quantity must be an integer"),
        };
        if !(QUANTITY_MIN..=QUANTITY_MAX).contains(&quantity) {
            return error_response(400, "quantity out of range");
        }
        if !CATALOG.iter().any(|(pid, _, _)| *pid == id) {
            return error_response(404, "unknown product");
        }
        *self.cart.entry(id).or_default() += quantity;
        json_response(200, &json!({"productId": id, "quantity": self.cart[&id]}))
    }

    fn checkout(&mut self) -> RawResponse {
        if self.cart.is_empty() {
            return error_response(409, "cart is empty");
        }
        let total: f64 = self
            .cart
            .iter()
            .map(|(id, q)| CATALOG.iter().find(|p| p.0 == *id).map_or(0.0, |p| p.2) * *q as f64)
            .sum();
        let items: i64 = self.cart.values().sum();
        self.cart.clear();
        self.purchases += 1;
        json_response(200, &json!({"items": items, "total": total}))
    }
}

impl SimApi for SimEComm {
    fn handle(&mut self, req: &SimRequest) -> RawResponse {
        match (req.path.as_str(), req.method.as_str()) {
            ("/products/search", "GET") => self.search(req),
            ("/addProductToCart", "POST") => self.add(req),
            ("/checkout", "POST") => self.checkout(),
            (path, _) => route_error(matches!(path, "/products/search" | "/addProductToCart" | "/checkout")),
        }
    }

    fn reset(&mut self) {
        *self = Self::new();
    }

    fn openapi(&self) -> Value {
        json!({
            "openapi": "3.0.0",
            "info": {"version": "1.0.0", "title": "Simple eComm", "license": {"name": "MIT"}},
            "servers": [{"url": "http://localhost:8080"}],
            "paths": {
                "/addProductToCart": {
                    "post": {
                        "summary": "Add product(s) to the cart",
                        "operationId": "addProductToCart",
                        "parameters": [
                            {"name": "productId", "in": "query", "required": true,
                             "schema": {"type": "integer", "format": "int64"}},
                            {"name": "quantity", "in": "query",
                             "schema": {"type": "integer", "default": 1, "minimum": 1, "maximum": 100}}
                        ],
                        "responses": {"200": {"description": "Product(s) added"}}
                    }
                },
                "/products/search": {
                    "get": {
                        "summary": "Search products by name",
                        "operationId": "productSearch",
                        "parameters": [
                            {"name": "keyword", "in": "query", "required": true, "schema": {"type": "string"}}
                        ],
                        "responses": {"200": {
                            "description": "Matching products",
                            "content": {"application/json": {"schema": {
                                "type": "array",
                                "items": {"type": "object", "properties": {
                                    "productId": {"type": "integer", "format": "int64"},
                                    "name": {"type": "string"},
                                    "price": {"type": "number", "format": "float"}
                                }}
                            }}}
                        }}
                    }
                },
                "/checkout": {
                    "post": {
                        "summary": "Finalize purchase",
                        "operationId": "checkout",
                        "responses": {"200": {"description": "Purchase completed"}}
                    }
                }
            }
        })
    }
}
