//! Audit data model: personas, parsed recommendation records, and the
//! JSON Lines corpus file.

mod group;
mod io;
mod parse;

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use group::{Gender, GroupSpec, LabelError, Markedness, Pronouns, Race};
pub use io::{append_record, load_corpus, read_corpus, save_corpus, write_corpus};
pub use parse::{pairs_to_json, parse_llm_response};

/// Current on-disk schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Number of products the prompt asks for.
pub const EXPECTED_PRODUCTS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("could not parse model response ({reason})")]
    UnparseableResponse { raw: String, reason: String },
    #[error("model response contained no key/value pairs")]
    EmptyObject,
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaMismatch { line: usize, found: u32 },
    #[error("line {line}: {message}")]
    ValidationFailure { line: usize, message: String },
}

/// Which part of a response feeds the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextField {
    Item,
    Reason,
    Both,
}

impl std::str::FromStr for TextField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "item" => Ok(TextField::Item),
            "reason" => Ok(TextField::Reason),
            "both" => Ok(TextField::Both),
            _ => Err(format!("unknown text field {s:?} (item, reason, both)")),
        }
    }
}

impl std::fmt::Display for TextField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TextField::Item => "item",
            TextField::Reason => "reason",
            TextField::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub name: String,
    pub reason: String,
}

/// One parsed model response for one persona.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationRecord {
    pub group: GroupSpec,
    pub products: Vec<Product>,
    pub raw_response: String,
    pub model_id: String,
    pub temperature: f64,
    pub created_at: DateTime<Utc>,
    pub response_index: u32,
}

impl RecommendationRecord {
    /// Builds a record by parsing `raw_response`.
    pub fn from_response(
        group: GroupSpec,
        raw_response: String,
        model_id: impl Into<String>,
        temperature: f64,
        created_at: DateTime<Utc>,
        response_index: u32,
    ) -> Result<Self, CorpusError> {
        let products = parse_llm_response(&raw_response)?
            .into_iter()
            .map(|(name, reason)| Product { name, reason })
            .collect();
        Ok(RecommendationRecord {
            group,
            products,
            raw_response,
            model_id: model_id.into(),
            temperature,
            created_at,
            response_index,
        })
    }

    /// Product names joined by single spaces.
    pub fn item_text(&self) -> String {
        join(self.products.iter().map(|p| p.name.as_str()))
    }

    /// Reasons joined by single spaces.
    pub fn reason_text(&self) -> String {
        join(self.products.iter().map(|p| p.reason.as_str()))
    }

    pub fn text(&self, field: TextField) -> String {
        match field {
            TextField::Item => self.item_text(),
            TextField::Reason => self.reason_text(),
            TextField::Both => format!("{} {}", self.item_text(), self.reason_text()),
        }
    }

    /// Soft quality flag: true when the response lists exactly ten products.
    pub fn is_conformant(&self) -> bool {
        self.products.len() == EXPECTED_PRODUCTS
    }

    fn key(&self) -> (GroupSpec, u32) {
        (self.group, self.response_index)
    }
}

fn join<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    parts.collect::<Vec<_>>().join(" ")
}

/// A validated, (group, response_index)-ordered set of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<RecommendationRecord>,
    pub schema_version: u32,
}

impl Default for Corpus {
    fn default() -> Self {
        Corpus {
            records: Vec::new(),
            schema_version: SCHEMA_VERSION,
        }
    }
}

impl Corpus {
    /// Sorts the records and rejects duplicate (group, response_index) keys
    /// and records without products.
    pub fn new(mut records: Vec<RecommendationRecord>) -> Result<Self, CorpusError> {
        records.sort_by_key(|r| r.key());
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.products.is_empty() {
                return Err(CorpusError::ValidationFailure {
                    line: i + 1,
                    message: format!("record {} #{} has no products", r.group, r.response_index),
                });
            }
            if !seen.insert(r.key()) {
                return Err(CorpusError::ValidationFailure {
                    line: i + 1,
                    message: format!("duplicate record {} #{}", r.group, r.response_index),
                });
            }
        }
        Ok(Corpus {
            records,
            schema_version: SCHEMA_VERSION,
        })
    }

    pub fn records(&self) -> &[RecommendationRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<RecommendationRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, group: GroupSpec, response_index: u32) -> bool {
        self.records
            .binary_search_by_key(&(group, response_index), |r| r.key())
            .is_ok()
    }

    /// Distinct groups present, in order.
    pub fn groups(&self) -> Vec<GroupSpec> {
        let mut out: Vec<GroupSpec> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.group) {
                out.push(r.group);
            }
        }
        out
    }

    pub fn records_where<'a>(
        &'a self,
        mut keep: impl FnMut(&GroupSpec) -> bool + 'a,
    ) -> impl Iterator<Item = &'a RecommendationRecord> + 'a {
        self.records.iter().filter(move |r| keep(&r.group))
    }
}

/// Small bundled corpus: eight Asian Woman and six White Man records whose
/// item texts reproduce the worked-example word counts.
pub const TOY_CORPUS_JSONL: &str = include_str!("../../data/toy_corpus.jsonl");

pub fn toy_corpus() -> Corpus {
    read_corpus(TOY_CORPUS_JSONL.as_bytes()).expect("bundled toy corpus is valid")
}

/// Concatenates the selected text of every record of `group`.
pub fn build_group_text(corpus: &Corpus, group: GroupSpec, field: TextField) -> String {
    build_text_where(corpus, |g| *g == group, field)
}

/// Concatenates the selected text of every record whose group passes `keep`.
pub fn build_text_where(
    corpus: &Corpus,
    keep: impl FnMut(&GroupSpec) -> bool,
    field: TextField,
) -> String {
    let texts: Vec<String> = corpus.records_where(keep).map(|r| r.text(field)).collect();
    texts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn record(group: GroupSpec, idx: u32, items: &[(&str, &str)]) -> RecommendationRecord {
        RecommendationRecord {
            group,
            products: items
                .iter()
                .map(|(n, r)| Product {
                    name: n.to_string(),
                    reason: r.to_string(),
                })
                .collect(),
            raw_response: String::new(),
            model_id: "test".into(),
            temperature: 1.0,
            created_at: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
            response_index: idx,
        }
    }

    const AW: GroupSpec = GroupSpec::new(Race::Asian, Gender::Woman);
    const WM: GroupSpec = GroupSpec::new(Race::White, Gender::Man);

    #[test]
    fn item_and_reason_text() {
        let r = record(AW, 0, &[("Rice Cooker", "Handy."), ("Tea Kettle", "Warm.")]);
        assert_eq!(r.item_text(), "Rice Cooker Tea Kettle");
        assert_eq!(r.reason_text(), "Handy. Warm.");
        assert!(!r.is_conformant());
    }

    #[test]
    fn group_text_concatenates_in_record_order() {
        let corpus = Corpus::new(vec![
            record(AW, 1, &[("smartwatch", "r3"), ("headphones", "r4")]),
            record(AW, 0, &[("rice cooker", "r1"), ("tea kettle", "r2")]),
            record(WM, 0, &[("coffee", "r5")]),
        ])
        .unwrap();
        assert_eq!(
            build_group_text(&corpus, AW, TextField::Item),
            "rice cooker tea kettle smartwatch headphones"
        );
        assert_eq!(
            build_group_text(
                &corpus,
                GroupSpec::new(Race::Black, Gender::Man),
                TextField::Item
            ),
            ""
        );
    }

    #[test]
    fn both_field_on_single_record() {
        let corpus = Corpus::new(vec![record(AW, 0, &[("a", "c"), ("b", "d")])]).unwrap();
        assert_eq!(build_group_text(&corpus, AW, TextField::Both), "a b c d");
    }

    #[test]
    fn both_length_is_item_plus_reason_plus_separator() {
        let corpus = Corpus::new(vec![
            record(AW, 0, &[("x y", "long reason"), ("z", "")]),
            record(AW, 3, &[("q", "r")]),
        ])
        .unwrap();
        let item = build_group_text(&corpus, AW, TextField::Item);
        let reason = build_group_text(&corpus, AW, TextField::Reason);
        let both = build_group_text(&corpus, AW, TextField::Both);
        assert_eq!(both.len(), item.len() + reason.len() + 1);
    }

    #[test]
    fn rejects_duplicates_and_empty_products() {
        assert!(matches!(
            Corpus::new(vec![
                record(AW, 0, &[("a", "b")]),
                record(AW, 0, &[("c", "d")])
            ]),
            Err(CorpusError::ValidationFailure { .. })
        ));
        assert!(matches!(
            Corpus::new(vec![record(AW, 0, &[])]),
            Err(CorpusError::ValidationFailure { .. })
        ));
    }

    #[test]
    fn sorted_by_group_then_index() {
        let corpus = Corpus::new(vec![
            record(WM, 0, &[("a", "b")]),
            record(AW, 2, &[("a", "b")]),
            record(AW, 1, &[("a", "b")]),
        ])
        .unwrap();
        let keys: Vec<_> = corpus.records().iter().map(|r| r.key()).collect();
        assert_eq!(keys, vec![(AW, 1), (AW, 2), (WM, 0)]);
        assert!(corpus.contains(AW, 2));
        assert!(!corpus.contains(AW, 0));
        assert_eq!(corpus.groups(), vec![AW, WM]);
    }
}
