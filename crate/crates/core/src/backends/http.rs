use std::time::Duration;

use super::transport::{CompletionRequest, CompletionResponse, Transport, TransportError};

/// Talks the `POST {endpoint}/v1/classify` wire protocol.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(endpoint: &str, timeout: Duration, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/v1/classify", endpoint.trim_end_matches('/'));
        Self { agent, url, api_key }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Transport for HttpTransport {
    fn complete(&mut self, request: &CompletionRequest) -> Result<String, TransportError> {
        let mut call = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call.send_json(request).map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Connection(other.to_string()),
        })?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(TransportError::Status(status));
        }
        let body: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::BadResponse(e.to_string()))?;
        Ok(body.completion)
    }
}
