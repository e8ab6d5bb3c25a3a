use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmGenError;

/// Hex SHA-256 over model id, prompt and response index.
pub fn cache_key(model_id: &str, prompt: &str, response_index: u32) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    hasher.update([0u8]);
    hasher.update(response_index.to_le_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    model_id: String,
    response_index: u32,
    response: String,
}

/// Raw responses that parsed successfully, optionally persisted as JSON Lines.
#[derive(Debug, Default)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: HashMap<String, String>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists. Unreadable lines are skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmGenError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|source| cache_err(&path, source))?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|source| cache_err(&path, source))?;
                match serde_json::from_str::<CacheLine>(&line) {
                    Ok(entry) => {
                        entries.insert(entry.key, entry.response);
                    }
                    Err(e) if !line.trim().is_empty() => {
                        log::warn!("skipping cache line in {}: {e}", path.display());
                    }
                    Err(_) => {}
                }
            }
        }
        Ok(ResponseCache {
            path: Some(path),
            entries,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(
        &mut self,
        model_id: &str,
        prompt: &str,
        response_index: u32,
        response: &str,
    ) -> Result<(), LlmGenError> {
        let key = cache_key(model_id, prompt, response_index);
        if let Some(path) = &self.path {
            let line = serde_json::to_string(&CacheLine {
                key: key.clone(),
                model_id: model_id.to_string(),
                response_index,
                response: response.to_string(),
            })
            .expect("cache line serializes");
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|source| cache_err(path, source))?;
            writeln!(file, "{line}").map_err(|source| cache_err(path, source))?;
        }
        self.entries.insert(key, response.to_string());
        Ok(())
    }
}

fn cache_err(path: &Path, source: std::io::Error) -> LlmGenError {
    LlmGenError::Cache {
        path: path.display().to_string(),
        source,
    }
}
