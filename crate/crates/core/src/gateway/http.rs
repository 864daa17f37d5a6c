//! Blocking chat-completion client, one endpoint per role.

use std::time::{Duration, Instant};

use serde_json::Value;

use super::wire::{parse_response, request_body};
use super::{Backend, CompletionRequest, CompletionResponse, EndpointConfig, GatewayConfig, GatewayError, ModelRole};

struct RoleClient {
    endpoint: EndpointConfig,
    agent: ureq::Agent,
}

pub struct HttpBackend {
    clients: [Option<RoleClient>; 3],
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let urls: Vec<_> = self.clients.iter().map(|c| c.as_ref().map(|c| c.endpoint.base_url.as_str())).collect();
        f.debug_struct("HttpBackend").field("endpoints", &urls).finish()
    }
}

impl HttpBackend {
    pub fn new(config: &GatewayConfig) -> Self {
        let clients = ModelRole::ALL.map(|role| {
            config.endpoint(role).map(|endpoint| {
                let agent = ureq::Agent::config_builder()
                    .http_status_as_error(false)
                    .timeout_global(Some(Duration::from_secs(endpoint.request_timeout_secs.max(1))))
                    .build()
                    .into();
                RoleClient { endpoint: endpoint.clone(), agent }
            })
        });
        Self { clients }
    }
}

fn url(base: &str) -> String {
    format!("{}/chat/completions", base.trim_end_matches('/'))
}

impl Backend for HttpBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let client = self.clients[req.role as usize]
            .as_ref()
            .ok_or(GatewayError::EndpointNotConfigured(req.role))?;
        let body = request_body(&client.endpoint.model, req);
        let mut call = client.agent.post(url(&client.endpoint.base_url));
        if let Some(key) = &client.endpoint.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let started = Instant::now();
        let mut resp = call
            .send_json(&body)
            .map_err(|e| GatewayError::EndpointUnreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::EndpointUnreachable(e.to_string()))?;
        let latency = started.elapsed();
        if !(200..300).contains(&status) {
            return Err(GatewayError::BadStatus { status, body: text });
        }
        let response_body: Value =
            serde_json::from_str(&text).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        let parsed = parse_response(&response_body).map_err(GatewayError::MalformedResponse)?;
        Ok(CompletionResponse {
            truncated: parsed.finish_reason.as_deref() == Some("length"),
            text: parsed.text,
            usage: parsed.usage,
            latency,
            finish_reason: parsed.finish_reason,
            request_body: body,
            response_body,
        })
    }
}
