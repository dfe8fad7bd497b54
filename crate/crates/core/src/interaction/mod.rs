//! Turning parameter assignments into HTTP exchanges and recording them.

mod harvest;
mod http;
mod log;
mod request;

pub use self::http::{HttpBackend, DEFAULT_TIMEOUT};
pub use self::log::{read_log, InteractionLog};
pub use harvest::{flatten_leaves, harvest};
pub use request::{build_request, build_request_lenient, encode_component, scalar_text, ConcreteRequest, RequestOrigin};

use crate::explorer::OutcomeClass;
use serde::{Deserialize, Serialize};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const LOG_SCHEMA_VERSION: u32 = 1;
pub const MAX_BODY_BYTES: usize = 64 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum InteractionError {
    #[error("operation {operation} needs path parameter {name}")]
    MissingPathParameter { operation: String, name: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("log: {0}")]
    Log(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

/// Something that answers requests: a real server or a simulation.
pub trait Backend {
    fn execute(&mut self, request: &ConcreteRequest) -> Result<RawResponse, InteractionError>;
    /// Returns the target to its initial state; a no-op for real servers.
    fn reset(&mut self) {}
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn execute(&mut self, request: &ConcreteRequest) -> Result<RawResponse, InteractionError> {
        (**self).execute(request)
    }

    fn reset(&mut self) {
        (**self).reset()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub schema_version: u32,
    pub seq: u64,
    /// Milliseconds since the Unix epoch at send time.
    pub timestamp_ms: u64,
    pub operation_id: String,
    pub request: ConcreteRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_error: Option<String>,
    #[serde(default)]
    pub response_headers: Vec<(String, String)>,
    #[serde(default)]
    pub response_body: String,
    #[serde(default)]
    pub body_truncated: bool,
    pub outcome: OutcomeClass,
    /// Raised for statuses outside 2xx/4xx/5xx.
    #[serde(default)]
    pub unusual_status: bool,
    pub elapsed_ms: f64,
}

impl Interaction {
    pub fn is_success(&self) -> bool {
        self.outcome.is_success()
    }

    pub fn operation(&self) -> usize {
        self.request.operation
    }
}

/// Cuts `body` to at most `MAX_BODY_BYTES`, on a character boundary.
pub fn truncate_body(mut body: String) -> (String, bool) {
    if body.len() <= MAX_BODY_BYTES {
        return (body, false);
    }
    let mut end = MAX_BODY_BYTES;
    while !body.is_char_boundary(end) {
        end -= 1;
    }
    body.truncate(end);
    (body, true)
}

/// Sends `request` and records the exchange. Failures become part of the
/// record rather than errors.
pub fn execute<B: Backend + ?Sized>(backend: &mut B, request: ConcreteRequest, operation_id: &str, seq: u64) -> Interaction {
    let timestamp_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let started = Instant::now();
    let result = backend.execute(&request);
    let elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
    let mut interaction = Interaction {
        schema_version: LOG_SCHEMA_VERSION,
        seq,
        timestamp_ms,
        operation_id: operation_id.to_string(),
        request,
        status: None,
        transport_error: None,
        response_headers: Vec::new(),
        response_body: String::new(),
        body_truncated: false,
        outcome: OutcomeClass::TransportError,
        unusual_status: false,
        elapsed_ms,
    };
    match result {
        Ok(response) => {
            let (body, truncated) = truncate_body(response.body);
            let class = response.status / 100;
            interaction.unusual_status = !matches!(class, 2 | 4 | 5);
            if interaction.unusual_status {
                ::log::info!("status {} for seq {seq} treated as a rejection", response.status);
            }
            interaction.outcome = OutcomeClass::from_status(response.status);
            interaction.status = Some(response.status);
            interaction.response_headers = response.headers;
            interaction.response_body = body;
            interaction.body_truncated = truncated;
        }
        Err(e) => interaction.transport_error = Some(e.to_string()),
    }
    interaction
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::{Arguments, HttpMethod, OperationSpec};

    struct Fixed(u16, &'static str);

    impl Backend for Fixed {
        fn execute(&mut self, _: &ConcreteRequest) -> Result<RawResponse, InteractionError> {
            if self.0 == 0 {
                return Err(InteractionError::Transport("refused".into()));
            }
            Ok(RawResponse {
                status: self.0,
                headers: vec![],
                body: self.1.into(),
            })
        }
    }

    fn request() -> ConcreteRequest {
        let op = OperationSpec {
            index: 0,
            operation_id: "checkout".into(),
            method: HttpMethod::Post,
            path: "/checkout".into(),
            parameters: vec![],
            request_body: None,
            description: None,
        };
        build_request(&op, &Arguments::new(), &[]).unwrap()
    }

    #[test]
    fn classification() {
        for (status, outcome, unusual) in [
            (200, OutcomeClass::Success2xx, false),
            (404, OutcomeClass::ClientError4xx, false),
            (500, OutcomeClass::ServerError5xx, false),
            (302, OutcomeClass::ClientError4xx, true),
            (101, OutcomeClass::ClientError4xx, true),
        ] {
            let i = execute(&mut Fixed(status, ""), request(), "checkout", 1);
            assert_eq!(i.outcome, outcome);
            assert_eq!(i.unusual_status, unusual);
            assert_eq!(i.status, Some(status));
        }
        let i = execute(&mut Fixed(0, ""), request(), "checkout", 2);
        assert_eq!(i.outcome, OutcomeClass::TransportError);
        assert!(i.transport_error.unwrap().contains("refused"));
    }

    #[test]
    fn long_bodies_are_truncated_on_char_boundary() {
        let body = "é".repeat(MAX_BODY_BYTES);
        let (cut, truncated) = truncate_body(body);
        assert!(truncated);
        assert!(cut.len() <= MAX_BODY_BYTES);
        assert_eq!(cut.len() % 2, 0);
        assert_eq!(truncate_body("ok".into()), ("ok".to_string(), false));
    }
}
