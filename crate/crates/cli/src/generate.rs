use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;

use recbias::corpus::GroupSpec;
use recbias::llmgen::{
    run_generation, ChatEndpoint, GenerationJob, HttpEndpoint, MockEndpoint, ModelEndpointConfig,
    PromptTemplate, ResponseCache,
};

#[derive(Args)]
pub struct GenerateArgs {
    /// Corpus file (JSON Lines). Existing records are kept and skipped.
    #[arg(long)]
    out: PathBuf,

    /// Use the built-in deterministic endpoint instead of HTTP.
    #[arg(long)]
    mock: bool,

    /// Seed of the mock endpoint's canned responses.
    #[arg(long, default_value_t = 0)]
    mock_seed: u64,

    /// "all" or a comma-separated list such as asian_woman,white_man.
    #[arg(long, default_value = "all")]
    groups: String,

    /// Responses per group.
    #[arg(long = "n", default_value_t = 15)]
    responses_per_group: u32,

    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    temperature: f64,

    #[arg(long = "model", default_value = "gpt-4o")]
    model_id: String,

    /// Extra attempts per response after the first.
    #[arg(long, default_value_t = 3)]
    max_retries: u32,

    /// Delay before the first retry, doubled after each failure.
    #[arg(long, default_value_t = 500)]
    retry_backoff_ms: u64,

    /// Endpoint root; /chat/completions is appended.
    #[arg(long, default_value = "https://api.openai.com/v1")]
    base_url: String,

    /// Environment variable holding the bearer key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,

    /// Per-request timeout.
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,

    /// Maximum requests in flight.
    #[arg(long, default_value_t = 4)]
    concurrency: usize,

    #[arg(long)]
    max_tokens: Option<u32>,

    /// Response cache file (JSON Lines), keyed by model, prompt and index.
    #[arg(long)]
    cache: Option<PathBuf>,

    /// Prompt template file; defaults to the built-in prompt.
    #[arg(long)]
    template: Option<PathBuf>,
}

fn parse_groups(spec: &str) -> Result<Vec<GroupSpec>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(GroupSpec::all());
    }
    let mut groups = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        groups.push(
            part.parse::<GroupSpec>()
                .with_context(|| format!("--groups entry {part:?}"))?,
        );
    }
    if groups.is_empty() {
        bail!("--groups selects no groups");
    }
    Ok(groups)
}

pub fn run(args: GenerateArgs) -> Result<ExitCode> {
    let template = match &args.template {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading template {}", path.display()))?;
            PromptTemplate::new(text)?
        }
        None => PromptTemplate::default(),
    };
    let job = GenerationJob {
        groups: parse_groups(&args.groups)?,
        responses_per_group: args.responses_per_group,
        temperature: args.temperature,
        model_id: args.model_id.clone(),
        max_retries: args.max_retries,
        retry_backoff: Duration::from_millis(args.retry_backoff_ms),
        template,
        endpoint: ModelEndpointConfig {
            base_url: args.base_url.clone(),
            api_key_env_var: args.api_key_env.clone(),
            timeout: Duration::from_secs(args.timeout_secs),
            requests_in_flight_limit: args.concurrency,
            max_tokens: args.max_tokens,
        },
    };
    job.validate()?;

    let endpoint: Box<dyn ChatEndpoint> = if args.mock {
        Box::new(MockEndpoint::new(args.mock_seed))
    } else {
        Box::new(HttpEndpoint::from_config(&job.endpoint)?)
    };
    let mut cache = args.cache.as_ref().map(ResponseCache::open).transpose()?;

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let outcome = run_generation(&job, endpoint.as_ref(), &args.out, cache.as_mut())?;

    eprintln!(
        "{}: {} records ({} new, {} requests, {} cache hits, {} failed cells)",
        args.out.display(),
        outcome.corpus.len(),
        outcome.new_records,
        outcome.requests_issued,
        outcome.cache_hits,
        outcome.failures.len()
    );
    for failure in &outcome.failures {
        eprintln!("  {failure}");
    }
    Ok(if outcome.is_complete() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
