use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, GroupSpec, Product, RecommendationRecord, SCHEMA_VERSION};

/// On-disk line layout. Derived texts are never stored.
#[derive(Serialize, Deserialize)]
struct RecordLine {
    race: String,
    gender: String,
    products: Vec<Product>,
    raw_response: String,
    model_id: String,
    temperature: f64,
    created_at: DateTime<Utc>,
    response_index: u32,
    schema_version: u32,
}

impl From<&RecommendationRecord> for RecordLine {
    fn from(r: &RecommendationRecord) -> Self {
        RecordLine {
            race: r.group.race.label().to_string(),
            gender: r.group.gender.label().to_string(),
            products: r.products.clone(),
            raw_response: r.raw_response.clone(),
            model_id: r.model_id.clone(),
            temperature: r.temperature,
            created_at: r.created_at,
            response_index: r.response_index,
            schema_version: SCHEMA_VERSION,
        }
    }
}

impl RecordLine {
    fn into_record(self, line: usize) -> Result<RecommendationRecord, CorpusError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CorpusError::SchemaMismatch {
                line,
                found: self.schema_version,
            });
        }
        let invalid = |message: String| CorpusError::ValidationFailure { line, message };
        let race = self.race.parse().map_err(|e| invalid(format!("{e}")))?;
        let gender = self.gender.parse().map_err(|e| invalid(format!("{e}")))?;
        if self.products.is_empty() {
            return Err(invalid("record has no products".into()));
        }
        Ok(RecommendationRecord {
            group: GroupSpec { race, gender },
            products: self.products,
            raw_response: self.raw_response,
            model_id: self.model_id,
            temperature: self.temperature,
            created_at: self.created_at,
            response_index: self.response_index,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::IoFailure {
        path: path.display().to_string(),
        source,
    }
}

/// Writes one record as a single JSON line.
pub fn append_record<W: Write>(out: &mut W, record: &RecommendationRecord) -> std::io::Result<()> {
    let line = serde_json::to_string(&RecordLine::from(record))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")
}

pub fn write_corpus<W: Write>(out: &mut W, corpus: &Corpus) -> std::io::Result<()> {
    for record in corpus.records() {
        append_record(out, record)?;
    }
    out.flush()
}

/// Reads JSON Lines; blank lines are skipped.
pub fn read_corpus<R: BufRead>(input: R) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::IoFailure {
            path: format!("<line {line_no}>"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine =
            serde_json::from_str(&line).map_err(|e| CorpusError::ValidationFailure {
                line: line_no,
                message: e.to_string(),
            })?;
        records.push(parsed.into_record(line_no)?);
    }
    Corpus::new(records)
}

/// Writes the corpus to `path`, replacing any existing file.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = File::create(&tmp).map_err(io_err(&tmp))?;
        let mut out = BufWriter::new(file);
        write_corpus(&mut out, corpus).map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_corpus(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Gender, Race};
    use chrono::TimeZone;

    fn sample() -> RecommendationRecord {
        RecommendationRecord::from_response(
            GroupSpec::new(Race::Latino, Gender::Nonbinary),
            r#"{"Hair Gel": "Styling. Hold.", "Rug": "Cozy, warm."}"#.into(),
            "gpt-4o",
            1.0,
            Utc.with_ymd_and_hms(2025, 3, 4, 5, 6, 7).unwrap(),
            4,
        )
        .unwrap()
    }

    #[test]
    fn empty_corpus_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        save_corpus(&Corpus::default(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        assert_eq!(load_corpus(&path).unwrap(), Corpus::default());
    }

    #[test]
    fn line_layout_has_expected_fields() {
        let mut buf = Vec::new();
        append_record(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n'));
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            vec![
                "created_at",
                "gender",
                "model_id",
                "products",
                "race",
                "raw_response",
                "response_index",
                "schema_version",
                "temperature"
            ]
        );
        assert_eq!(obj["race"], "Latino");
        assert_eq!(obj["products"][0]["name"], "Hair Gel");
        assert!(!text.contains("item_text"));
    }

    #[test]
    fn unknown_race_is_validation_failure() {
        let mut buf = Vec::new();
        append_record(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace("\"Latino\"", "\"Martian\"");
        let err = read_corpus(text.as_bytes()).unwrap_err();
        assert!(
            matches!(err, CorpusError::ValidationFailure { line: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn unknown_schema_version() {
        let mut buf = Vec::new();
        append_record(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace("\"schema_version\":1", "\"schema_version\":7");
        let err = read_corpus(text.as_bytes()).unwrap_err();
        assert!(
            matches!(err, CorpusError::SchemaMismatch { found: 7, .. }),
            "{err}"
        );
    }

    #[test]
    fn missing_file_is_io_failure() {
        assert!(matches!(
            load_corpus("/nonexistent/dir/c.jsonl"),
            Err(CorpusError::IoFailure { .. })
        ));
    }
}
