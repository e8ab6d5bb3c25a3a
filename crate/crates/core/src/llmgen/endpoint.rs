use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::GroupSpec;

use super::LlmGenError;

/// One completion request. `group`, `response_index` and `attempt` are
/// local metadata and are not sent over the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model_id: String,
    pub temperature: f64,
    pub prompt: String,
    pub group: GroupSpec,
    pub response_index: u32,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EndpointError {
    /// Connection refused, DNS failure, timeout.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    MalformedBody(String),
}

/// A chat-completions-compatible backend.
pub trait ChatEndpoint: Send + Sync {
    /// Returns the text content of the first choice.
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpointConfig {
    /// e.g. `https://api.openai.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    /// Name of the environment variable holding the bearer key.
    pub api_key_env_var: String,
    pub timeout: Duration,
    pub requests_in_flight_limit: usize,
    pub max_tokens: Option<u32>,
}

impl Default for ModelEndpointConfig {
    fn default() -> Self {
        ModelEndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env_var: "OPENAI_API_KEY".into(),
            timeout: Duration::from_secs(120),
            requests_in_flight_limit: 4,
            max_tokens: None,
        }
    }
}

/// Request body for a single-user-message chat completion.
pub fn request_body(
    model_id: &str,
    temperature: f64,
    prompt: &str,
    max_tokens: Option<u32>,
) -> serde_json::Value {
    let mut body = json!({
        "model": model_id,
        "temperature": temperature,
        "messages": [{"role": "user", "content": prompt}],
    });
    if let Some(max) = max_tokens {
        body["max_tokens"] = json!(max);
    }
    body
}

/// Extracts `choices[0].message.content`.
pub fn first_choice_content(body: &str) -> Result<String, EndpointError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| EndpointError::MalformedBody(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| EndpointError::MalformedBody("missing choices[0].message.content".into()))
}

/// Blocking HTTP client for a chat-completions endpoint.
pub struct HttpEndpoint {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
    max_tokens: Option<u32>,
}

impl HttpEndpoint {
    /// Reads the bearer key from the configured environment variable.
    pub fn from_config(config: &ModelEndpointConfig) -> Result<Self, LlmGenError> {
        let api_key = std::env::var(&config.api_key_env_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmGenError::AuthMissing(config.api_key_env_var.clone()))?;
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: &ModelEndpointConfig, api_key: String) -> Result<Self, LlmGenError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmGenError::InvalidJob(format!("http client: {e}")))?;
        Ok(HttpEndpoint {
            client,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            api_key,
            max_tokens: config.max_tokens,
        })
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let body = request_body(
            &request.model_id,
            request.temperature,
            &request.prompt,
            self.max_tokens,
        );
        let response = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        match status {
            200..=299 => first_choice_content(&text),
            401 | 403 => Err(EndpointError::Auth(status)),
            _ => Err(EndpointError::Http {
                status,
                body: text.chars().take(500).collect(),
            }),
        }
    }
}
