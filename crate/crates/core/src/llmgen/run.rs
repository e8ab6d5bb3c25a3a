use std::collections::VecDeque;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::Duration;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    append_record, read_corpus, save_corpus, Corpus, CorpusError, GroupSpec, RecommendationRecord,
};

use super::cache::{cache_key, ResponseCache};
use super::endpoint::{ChatEndpoint, CompletionRequest, EndpointError, ModelEndpointConfig};
use super::template::PromptTemplate;
use super::LlmGenError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationJob {
    pub groups: Vec<GroupSpec>,
    pub responses_per_group: u32,
    pub temperature: f64,
    pub model_id: String,
    /// Extra attempts per cell after the first.
    pub max_retries: u32,
    /// Base delay between attempts, doubled after each failure.
    pub retry_backoff: Duration,
    #[serde(skip)]
    pub template: PromptTemplate,
    pub endpoint: ModelEndpointConfig,
}

impl Default for GenerationJob {
    fn default() -> Self {
        GenerationJob {
            groups: GroupSpec::all().to_vec(),
            responses_per_group: 15,
            temperature: 1.0,
            model_id: "gpt-4o".into(),
            max_retries: 3,
            retry_backoff: Duration::from_millis(500),
            template: PromptTemplate::default(),
            endpoint: ModelEndpointConfig::default(),
        }
    }
}

impl GenerationJob {
    pub fn validate(&self) -> Result<(), LlmGenError> {
        let bad = |msg: &str| Err(LlmGenError::InvalidJob(msg.to_string()));
        if self.groups.is_empty() {
            return bad("no groups selected");
        }
        if self.responses_per_group < 1 {
            return bad("responses_per_group must be at least 1");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a finite value >= 0");
        }
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty");
        }
        if self.endpoint.requests_in_flight_limit < 1 {
            return bad("requests_in_flight_limit must be at least 1");
        }
        Ok(())
    }
}

/// A cell that never produced a parseable response.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub group: GroupSpec,
    pub response_index: u32,
    pub attempts: u32,
    pub last_error: String,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "retries exhausted for {} #{} after {} attempts: {}",
            self.group, self.response_index, self.attempts, self.last_error
        )
    }
}

#[derive(Debug)]
pub struct GenerationOutcome {
    /// Everything in the corpus file after the run, old and new.
    pub corpus: Corpus,
    pub new_records: usize,
    pub requests_issued: usize,
    pub cache_hits: usize,
    /// One [`LlmGenError::RetriesExhausted`] per failed cell.
    pub failures: Vec<LlmGenError>,
}

impl GenerationOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Cell {
    group: GroupSpec,
    response_index: u32,
    prompt: String,
}

enum CellResult {
    Done(RecommendationRecord, String),
    Failed {
        failure: CellFailure,
        transport_only: bool,
    },
    AuthRejected(u16),
}

/// Fills every missing (group, response_index) cell of `job` in the corpus at
/// `corpus_path`.
///
/// Existing records are kept and their cells skipped. New records are
/// appended as they arrive, so an interrupted run can be resumed. At the end
/// the file is rewritten in (group, index) order.
pub fn run_generation(
    job: &GenerationJob,
    endpoint: &dyn ChatEndpoint,
    corpus_path: &Path,
    mut cache: Option<&mut ResponseCache>,
) -> Result<GenerationOutcome, LlmGenError> {
    job.validate()?;
    let mut records = recover_records(corpus_path)?;
    let existing = Corpus::new(records.clone())?;

    let mut groups = job.groups.clone();
    groups.sort();
    groups.dedup();

    let mut pending = VecDeque::new();
    let mut cached = Vec::new();
    for group in groups {
        let prompt = job.template.render(&group)?;
        for response_index in 0..job.responses_per_group {
            if existing.contains(group, response_index) {
                continue;
            }
            let hit = cache
                .as_deref()
                .and_then(|c| c.get(&cache_key(&job.model_id, &prompt, response_index)))
                .and_then(|raw| {
                    RecommendationRecord::from_response(
                        group,
                        raw.to_string(),
                        job.model_id.clone(),
                        job.temperature,
                        Utc::now(),
                        response_index,
                    )
                    .ok()
                });
            match hit {
                Some(record) => cached.push(record),
                None => pending.push_back(Cell {
                    group,
                    response_index,
                    prompt: prompt.clone(),
                }),
            }
        }
    }

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(corpus_path)
        .map_err(|source| io_failure(corpus_path, source))?;
    let mut writer = BufWriter::new(file);
    let mut append = |record: &RecommendationRecord| -> Result<(), LlmGenError> {
        append_record(&mut writer, record)
            .and_then(|_| writer.flush())
            .map_err(|source| io_failure(corpus_path, source))
    };

    let cache_hits = cached.len();
    let mut new_records = 0;
    for record in cached {
        append(&record)?;
        records.push(record);
        new_records += 1;
    }

    let workers = job.endpoint.requests_in_flight_limit.min(pending.len());
    let queue = Mutex::new(pending);
    let stop = AtomicBool::new(false);
    let requests = AtomicUsize::new(0);
    let mut failures = Vec::new();
    let mut fatal: Option<LlmGenError> = None;
    let mut any_success = !existing.is_empty() || new_records > 0;

    std::thread::scope(|scope| -> Result<(), LlmGenError> {
        let (tx, rx) = mpsc::channel::<CellResult>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (queue, stop, requests) = (&queue, &stop, &requests);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Some(cell) = queue.lock().unwrap().pop_front() else {
                    break;
                };
                let result = run_cell(job, endpoint, &cell, requests, stop);
                if tx.send(result).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Single writer: every record reaches the file through this loop.
        for result in rx {
            match result {
                CellResult::Done(record, raw) => {
                    append(&record)?;
                    if let Some(cache) = cache.as_deref_mut() {
                        let prompt = job.template.render(&record.group)?;
                        cache.insert(&job.model_id, &prompt, record.response_index, &raw)?;
                    }
                    log::info!("{} #{} done", record.group, record.response_index);
                    records.push(record);
                    new_records += 1;
                    any_success = true;
                }
                CellResult::Failed {
                    failure,
                    transport_only,
                } => {
                    log::warn!("{failure}");
                    if transport_only && !any_success && fatal.is_none() {
                        stop.store(true, Ordering::SeqCst);
                        fatal = Some(LlmGenError::EndpointUnreachable(failure.last_error.clone()));
                    }
                    failures.push(LlmGenError::RetriesExhausted(failure));
                }
                CellResult::AuthRejected(status) => {
                    stop.store(true, Ordering::SeqCst);
                    fatal.get_or_insert(LlmGenError::AuthRejected(status));
                }
            }
        }
        Ok(())
    })?;

    let corpus = Corpus::new(records)?;
    save_corpus(&corpus, corpus_path)?;
    if let Some(err) = fatal {
        return Err(err);
    }
    Ok(GenerationOutcome {
        corpus,
        new_records,
        requests_issued: requests.load(Ordering::SeqCst),
        cache_hits,
        failures,
    })
}

fn run_cell(
    job: &GenerationJob,
    endpoint: &dyn ChatEndpoint,
    cell: &Cell,
    requests: &AtomicUsize,
    stop: &AtomicBool,
) -> CellResult {
    let mut last_error = String::new();
    let mut transport_only = true;
    let mut attempts = 0;
    for attempt in 0..=job.max_retries {
        if attempt > 0 {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            let delay = job.retry_backoff.saturating_mul(1 << (attempt - 1).min(16));
            if !delay.is_zero() {
                std::thread::sleep(delay);
            }
        }
        let request = CompletionRequest {
            model_id: job.model_id.clone(),
            temperature: job.temperature,
            prompt: cell.prompt.clone(),
            group: cell.group,
            response_index: cell.response_index,
            attempt,
        };
        requests.fetch_add(1, Ordering::SeqCst);
        attempts += 1;
        match endpoint.complete(&request) {
            Ok(raw) => {
                transport_only = false;
                match RecommendationRecord::from_response(
                    cell.group,
                    raw.clone(),
                    job.model_id.clone(),
                    job.temperature,
                    Utc::now(),
                    cell.response_index,
                ) {
                    Ok(record) => return CellResult::Done(record, raw),
                    Err(e) => last_error = e.to_string(),
                }
            }
            Err(EndpointError::Auth(status)) => return CellResult::AuthRejected(status),
            Err(e @ EndpointError::Transport(_)) => last_error = e.to_string(),
            Err(e) => {
                transport_only = false;
                last_error = e.to_string();
            }
        }
        log::debug!(
            "{} #{} attempt {attempt} failed: {last_error}",
            cell.group,
            cell.response_index
        );
    }
    CellResult::Failed {
        failure: CellFailure {
            group: cell.group,
            response_index: cell.response_index,
            attempts,
            last_error,
        },
        transport_only,
    }
}

/// Reads an existing corpus file for resumption. A final line cut short by
/// an interrupted write is dropped and the file rewritten without it.
fn recover_records(path: &Path) -> Result<Vec<RecommendationRecord>, LlmGenError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut text = String::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_string(&mut text))
        .map_err(|source| io_failure(path, source))?;
    match read_corpus(text.as_bytes()) {
        Ok(corpus) => Ok(corpus.into_records()),
        Err(CorpusError::ValidationFailure { line, message }) if !text.ends_with('\n') => {
            let total = text.as_bytes().lines().count();
            if line != total {
                return Err(CorpusError::ValidationFailure { line, message }.into());
            }
            log::warn!("dropping truncated last line {line} of {}", path.display());
            let cut = text.trim_end_matches(|c| c != '\n').len();
            let corpus = read_corpus(&text.as_bytes()[..cut])?;
            save_corpus(&corpus, path)?;
            Ok(corpus.into_records())
        }
        Err(e) => Err(e.into()),
    }
}

fn io_failure(path: &Path, source: std::io::Error) -> LlmGenError {
    CorpusError::IoFailure {
        path: path.display().to_string(),
        source,
    }
    .into()
}
