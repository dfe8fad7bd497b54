use super::{Backend, ConcreteRequest, InteractionError, RawResponse};
use std::time::Duration;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Plain HTTP/1.1 client against a fixed base URL. Redirects are returned
/// as-is, never followed.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    base_url: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).redirects(0).build(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }
}

fn collect(response: ureq::Response) -> Result<RawResponse, InteractionError> {
    let status = response.status();
    let headers = response
        .headers_names()
        .into_iter()
        .filter_map(|name| response.header(&name).map(|v| (name.clone(), v.to_string())))
        .collect();
    let body = response
        .into_string()
        .map_err(|e| InteractionError::Transport(e.to_string()))?;
    Ok(RawResponse { status, headers, body })
}

impl Backend for HttpBackend {
    fn execute(&mut self, request: &ConcreteRequest) -> Result<RawResponse, InteractionError> {
        let url = format!("{}{}", self.base_url, request.target());
        let mut call = self.agent.request(request.method.as_str(), &url);
        for (k, v) in &request.headers {
            call = call.set(k, v);
        }
        let result = match request.body_text() {
            Some(body) => call.set("Content-Type", "application/json").send_string(&body),
            None => call.call(),
        };
        match result {
            Ok(response) | Err(ureq::Error::Status(_, response)) => collect(response),
            Err(e) => Err(InteractionError::Transport(e.to_string())),
        }
    }
}
