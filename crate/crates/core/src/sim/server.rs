use super::{SimApi, SimRequest};
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

/// A sim served over localhost HTTP. Requests are handled one at a time on
/// a background thread.
pub struct SimServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl SimServer {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub fn start(mut api: Box<dyn SimApi>, addr: &str) -> Result<Self, String> {
        let server = Arc::new(tiny_http::Server::http(addr).map_err(|e| format!("cannot bind {addr}: {e}"))?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| "server is not bound to an IP address".to_string())?;
        let inner = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for mut request in inner.incoming_requests() {
                let mut body = String::new();
                if request.as_reader().read_to_string(&mut body).is_err() {
                    let _ = request.respond(tiny_http::Response::from_string("unreadable body").with_status_code(400));
                    continue;
                }
                let sim_request = SimRequest::parse(request.method().as_str(), request.url(), Some(body));
                let response = api.handle(&sim_request);
                let mut reply = tiny_http::Response::from_string(response.body).with_status_code(response.status);
                for (k, v) in &response.headers {
                    if let Ok(h) = tiny_http::Header::from_bytes(k.as_bytes(), v.as_bytes()) {
                        reply.add_header(h);
                    }
                }
                let _ = request.respond(reply);
            }
        });
        Ok(Self {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops, which only happens on shutdown.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for SimServer {
    fn drop(&mut self) {
        self.stop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{build_request, Backend, HttpBackend};
    use crate::oas::{parse_spec, FormatHint};
    use crate::sim::{sim_openapi_yaml, SimEComm};
    use serde_json::json;
    use std::time::Duration;

    #[test]
    fn serves_over_http() {
        let server = SimServer::start(Box::new(SimEComm::new()), "127.0.0.1:0").unwrap();
        let api = parse_spec(sim_openapi_yaml(&SimEComm::new()).as_bytes(), FormatHint::Yaml).unwrap();
        let mut backend = HttpBackend::new(&server.base_url(), Duration::from_secs(5));
        let search = api.operation_by_id("productSearch").unwrap();
        let r = backend
            .execute(&build_request(search, &[(0, json!("dys"))].into_iter().collect(), &[]).unwrap())
            .unwrap();
        assert_eq!(r.status, 200);
        assert!(r.body.contains("Odyssey"));
        let checkout = api.operation_by_id("checkout").unwrap();
        let r = backend
            .execute(&build_request(checkout, &Default::default(), &[]).unwrap())
            .unwrap();
        assert_eq!(r.status, 409);
        server.shutdown();
    }
}
