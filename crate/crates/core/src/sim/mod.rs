//! Deterministic stateful APIs with undocumented ordering constraints, usable
//! in-process or over localhost HTTP.

mod chain;
mod ecomm;
mod flaky;
mod server;

pub use chain::{SimChain, DEFAULT_CHAIN_LENGTH};
pub use ecomm::{SimEComm, CATALOG};
pub use flaky::{SimFlaky5xx, FLAKY_WINDOW};
pub use server::SimServer;

use crate::interaction::{Backend, ConcreteRequest, InteractionError, RawResponse};
use percent_encoding::percent_decode_str;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::str::FromStr;

/// A request as a simulated API sees it: decoded path, decoded query pairs
/// and the raw body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRequest {
    pub method: String,
    pub path: String,
    pub query: Vec<(String, String)>,
    pub body: Option<String>,
}

fn decode(raw: &str) -> String {
    percent_decode_str(&raw.replace('+', " "))
        .decode_utf8_lossy()
        .into_owned()
}

impl SimRequest {
    pub fn parse(method: &str, target: &str, body: Option<String>) -> Self {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let query = query
            .split('&')
            .filter(|p| !p.is_empty())
            .map(|pair| {
                let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
                (decode(k), decode(v))
            })
            .collect();
        Self {
            method: method.to_ascii_uppercase(),
            path: decode(path),
            query,
            body: body.filter(|b| !b.is_empty()),
        }
    }

    pub fn query_value(&self, name: &str) -> Option<&str> {
        self.query.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn json_body(&self) -> Option<Value> {
        self.body.as_deref().and_then(|b| serde_json::from_str(b).ok())
    }
}

pub(crate) fn json_response(status: u16, body: &Value) -> RawResponse {
    RawResponse {
        status,
        headers: vec![("Content-Type".into(), "application/json".into())],
        body: body.to_string(),
    }
}

pub(crate) fn error_response(status: u16, message: &str) -> RawResponse {
    json_response(status, &serde_json::json!({ "error": message }))
}

/// Shared routing outcome for paths a sim does not serve.
pub(crate) fn route_error(known_path: bool) -> RawResponse {
    if known_path {
        error_response(405, "method not allowed")
    } else {
        error_response(404, "no such route")
    }
}

/// Parses an integer query value, accepting only canonical integer text.
pub(crate) fn parse_int(raw: Option<&str>) -> Result<Option<i64>, ()> {
    match raw {
        None => Ok(None),
        Some(text) => text.trim().parse::<i64>().map(Some).map_err(|_| ()),
    }
}

pub trait SimApi: Send {
    fn handle(&mut self, request: &SimRequest) -> RawResponse;
    /// Back to the freshly constructed state.
    fn reset(&mut self);
    /// OpenAPI 3.0 description, without the ordering constraints.
    fn openapi(&self) -> Value;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SimKind {
    Ecomm,
    Chain(usize),
    Flaky,
}

impl SimKind {
    pub fn build(self, seed: u64) -> Box<dyn SimApi> {
        match self {
            Self::Ecomm => Box::new(SimEComm::new()),
            Self::Chain(n) => Box::new(SimChain::new(n, seed)),
            Self::Flaky => Box::new(SimFlaky5xx::new()),
        }
    }
}

impl fmt::Display for SimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ecomm => f.write_str("ecomm"),
            Self::Chain(n) => write!(f, "chain:{n}"),
            Self::Flaky => f.write_str("flaky"),
        }
    }
}

impl FromStr for SimKind {
    type Err = String;

    /// Accepts `ecomm`, `flaky`, `chain` and `chain:N`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        match lower.split_once(':') {
            None => match lower.as_str() {
                "ecomm" => Ok(Self::Ecomm),
                "flaky" => Ok(Self::Flaky),
                "chain" => Ok(Self::Chain(DEFAULT_CHAIN_LENGTH)),
                _ => Err(format!("unknown simulation {s:?} (expected ecomm, chain[:N] or flaky)")),
            },
            Some(("chain", n)) => match n.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(Self::Chain(n)),
                _ => Err(format!("chain length must be a positive integer, got {n:?}")),
            },
            Some(_) => Err(format!("unknown simulation {s:?}")),
        }
    }
}

impl TryFrom<String> for SimKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SimKind> for String {
    fn from(k: SimKind) -> String {
        k.to_string()
    }
}

/// Emits the sim's description as a YAML document.
pub fn sim_openapi_yaml(api: &dyn SimApi) -> String {
    serde_yaml::to_string(&api.openapi()).expect("JSON values serialize as YAML")
}

/// Runs a sim in-process behind the [`Backend`] interface.
pub struct SimBackend {
    api: Box<dyn SimApi>,
}

impl SimBackend {
    pub fn new(api: Box<dyn SimApi>) -> Self {
        Self { api }
    }

    pub fn api(&self) -> &dyn SimApi {
        self.api.as_ref()
    }
}

impl Backend for SimBackend {
    /// The request goes through the same encode/decode steps as on the wire.
    fn execute(&mut self, request: &ConcreteRequest) -> Result<RawResponse, InteractionError> {
        let sim_request = SimRequest::parse(request.method.as_str(), &request.target(), request.body_text());
        Ok(self.api.handle(&sim_request))
    }

    fn reset(&mut self) {
        self.api.reset()
    }
}
