//! Parsing of model responses into ordered `(product, reason)` pairs.
//!
//! Well-formed JSON objects are accepted directly. Otherwise a single repair
//! pass runs, always in the same order:
//!
//! 1. drop markdown code-fence lines,
//! 2. drop commas that directly precede a closing brace (outside strings),
//! 3. cut everything before the first `{` and after the last `}`.
//!
//! If the repaired text still does not parse, the raw text is returned in the
//! error so the caller can log or regenerate.

use std::fmt;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use super::CorpusError;

/// Key/value pairs of a JSON object in document order, duplicates kept.
struct OrderedPairs(Vec<(String, String)>);

impl<'de> Deserialize<'de> for OrderedPairs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairsVisitor;

        impl<'de> Visitor<'de> for PairsVisitor {
            type Value = OrderedPairs;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object with string values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut pairs = Vec::with_capacity(map.size_hint().unwrap_or(10));
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    pairs.push((k, v));
                }
                Ok(OrderedPairs(pairs))
            }
        }

        deserializer.deserialize_map(PairsVisitor)
    }
}

fn parse_object(text: &str) -> Result<Vec<(String, String)>, serde_json::Error> {
    serde_json::from_str::<OrderedPairs>(text.trim()).map(|p| p.0)
}

/// Parses a model response into `(product_name, reason)` pairs.
pub fn parse_llm_response(raw: &str) -> Result<Vec<(String, String)>, CorpusError> {
    if raw.trim().is_empty() {
        return Err(CorpusError::UnparseableResponse {
            raw: raw.to_string(),
            reason: "empty response".into(),
        });
    }
    let pairs = match parse_object(raw) {
        Ok(pairs) => pairs,
        Err(_) => parse_object(&repair(raw)).map_err(|e| CorpusError::UnparseableResponse {
            raw: raw.to_string(),
            reason: e.to_string(),
        })?,
    };
    if pairs.is_empty() {
        return Err(CorpusError::EmptyObject);
    }
    Ok(pairs)
}

/// Serializes pairs back into a single JSON object, preserving order.
pub fn pairs_to_json(pairs: &[(String, String)]) -> String {
    let mut out = String::from("{");
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        // String serialization cannot fail.
        out.push_str(&serde_json::to_string(k).unwrap());
        out.push_str(": ");
        out.push_str(&serde_json::to_string(v).unwrap());
    }
    out.push('}');
    out
}

pub(crate) fn repair(raw: &str) -> String {
    let unfenced = strip_code_fences(raw);
    let no_trailing = strip_trailing_commas(&unfenced);
    trim_to_braces(&no_trailing).to_string()
}

fn strip_code_fences(text: &str) -> String {
    text.lines()
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                out.push(c);
            }
            ',' => {
                let next = chars[i + 1..].iter().find(|ch| !ch.is_whitespace());
                if next != Some(&'}') {
                    out.push(c);
                }
            }
            _ => out.push(c),
        }
    }
    out
}

fn trim_to_braces(text: &str) -> &str {
    match (text.find('{'), text.rfind('}')) {
        (Some(start), Some(end)) if start < end => &text[start..=end],
        _ => text,
    }
}
