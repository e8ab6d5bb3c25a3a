use std::collections::BTreeSet;
use std::path::Path;

use super::normalize_tokenize;

/// Shipped lexicon, version 1.
pub const DEFAULT_LEXICON: &str = include_str!("../../data/anonymization_lexicon.txt");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: term {term:?} does not normalize to a single token")]
    MultiTokenTerm { line: usize, term: String },
}

/// Whole-token terms removed before analysis.
///
/// The text format is one term per line, `#` starts a comment, and optional
/// `[pronouns]`, `[race]`, `[gender]` or `[titles]` headers pick the set the
/// following terms belong to. Terms before any header land in `other_terms`.
/// Every term is normalized with the tokenizer, so "Middle-Eastern" and
/// "Mr." match the tokens "middleeastern" and "mr".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonymizationLexicon {
    pub pronoun_terms: BTreeSet<String>,
    pub race_terms: BTreeSet<String>,
    pub gender_terms: BTreeSet<String>,
    pub title_terms: BTreeSet<String>,
    pub other_terms: BTreeSet<String>,
}

impl AnonymizationLexicon {
    /// An empty lexicon that removes nothing.
    pub fn empty() -> Self {
        AnonymizationLexicon {
            pronoun_terms: BTreeSet::new(),
            race_terms: BTreeSet::new(),
            gender_terms: BTreeSet::new(),
            title_terms: BTreeSet::new(),
            other_terms: BTreeSet::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::empty();
        let mut section = None::<&'static str>;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(match name.trim().to_ascii_lowercase().as_str() {
                    "pronouns" => "pronouns",
                    "race" => "race",
                    "gender" => "gender",
                    "titles" => "titles",
                    _ => {
                        return Err(LexiconError::UnknownSection {
                            line: line_no,
                            name: name.to_string(),
                        })
                    }
                });
                continue;
            }
            let mut tokens = normalize_tokenize(line).into_inner();
            if tokens.len() != 1 {
                return Err(LexiconError::MultiTokenTerm {
                    line: line_no,
                    term: line.to_string(),
                });
            }
            let term = tokens.pop().unwrap();
            let set = match section {
                Some("pronouns") => &mut lex.pronoun_terms,
                Some("race") => &mut lex.race_terms,
                Some("gender") => &mut lex.gender_terms,
                Some("titles") => &mut lex.title_terms,
                _ => &mut lex.other_terms,
            };
            set.insert(term);
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.pronoun_terms.contains(token)
            || self.race_terms.contains(token)
            || self.gender_terms.contains(token)
            || self.title_terms.contains(token)
            || self.other_terms.contains(token)
    }

    /// Every term across all sets, sorted.
    pub fn terms(&self) -> BTreeSet<&str> {
        self.pronoun_terms
            .iter()
            .chain(&self.race_terms)
            .chain(&self.gender_terms)
            .chain(&self.title_terms)
            .chain(&self.other_terms)
            .map(String::as_str)
            .collect()
    }
}

impl Default for AnonymizationLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("shipped lexicon parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_lexicon_covers_listed_terms() {
        let lex = AnonymizationLexicon::default();
        for t in ["he", "him", "his", "she", "her", "they", "them", "their"] {
            assert!(lex.pronoun_terms.contains(t), "{t}");
        }
        for t in [
            "asian",
            "black",
            "latino",
            "middleeastern",
            "white",
            "latina",
            "latinx",
            "caucasian",
        ] {
            assert!(lex.race_terms.contains(t), "{t}");
        }
        for t in ["man", "woman", "men", "women", "nonbinary"] {
            assert!(lex.gender_terms.contains(t), "{t}");
        }
        for t in ["mr", "mrs", "ms", "mx"] {
            assert!(lex.title_terms.contains(t), "{t}");
        }
    }

    #[test]
    fn product_vocabulary_is_not_in_lexicon() {
        let lex = AnonymizationLexicon::default();
        for t in [
            "rice",
            "cooker",
            "tea",
            "smartwatch",
            "headphones",
            "cream",
            "bb",
            "hair",
            "oil",
            "inclusive",
            "bottle",
            "reusable",
        ] {
            assert!(!lex.contains(t), "{t}");
        }
    }

    #[test]
    fn parse_sections_and_comments() {
        let lex = AnonymizationLexicon::parse(
            "# header\nfoo\n[race]\nMiddle-Eastern # inline\n\n[titles]\nMr.\n",
        )
        .unwrap();
        assert!(lex.other_terms.contains("foo"));
        assert!(lex.race_terms.contains("middleeastern"));
        assert!(lex.title_terms.contains("mr"));
        assert_eq!(lex.terms().len(), 3);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            AnonymizationLexicon::parse("[colours]\nred"),
            Err(LexiconError::UnknownSection { line: 1, .. })
        ));
        assert!(matches!(
            AnonymizationLexicon::parse("middle eastern"),
            Err(LexiconError::MultiTokenTerm { line: 1, .. })
        ));
    }
}
