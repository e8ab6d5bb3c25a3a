//! Prompt rendering and corpus generation against a chat-completions endpoint.

mod cache;
mod endpoint;
mod mock;
mod run;
mod template;

pub use cache::{cache_key, ResponseCache};
pub use endpoint::{
    first_choice_content, request_body, ChatEndpoint, CompletionRequest, EndpointError,
    HttpEndpoint, ModelEndpointConfig,
};
pub use mock::{MockEndpoint, MALFORMED_REPLY};
pub use run::{run_generation, CellFailure, GenerationJob, GenerationOutcome};
pub use template::{PromptTemplate, DEFAULT_TEMPLATE};

use crate::corpus::CorpusError;

#[derive(Debug, thiserror::Error)]
pub enum LlmGenError {
    #[error("unknown placeholder {{{0}}} in prompt template")]
    UnknownPlaceholder(String),
    #[error("environment variable {0} is unset or empty")]
    AuthMissing(String),
    #[error("endpoint rejected the credentials (HTTP {0})")]
    AuthRejected(u16),
    #[error("invalid generation job: {0}")]
    InvalidJob(String),
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("{0}")]
    RetriesExhausted(CellFailure),
    #[error("response cache {path}: {source}")]
    Cache {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
