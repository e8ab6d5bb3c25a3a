//! Text normalization, tokenization, demographic-marker removal and word
//! counting.

mod counts;
mod lexicon;

use std::collections::HashSet;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub use counts::{count_words, merge_counts, GroupCounts};
pub use lexicon::{AnonymizationLexicon, LexiconError, DEFAULT_LEXICON};

/// Ordered lowercase tokens, each matching `[a-z0-9]+`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenList(Vec<String>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid token {0:?}: tokens must match [a-z0-9]+")]
pub struct InvalidToken(pub String);

impl TokenList {
    /// Wraps pre-split tokens, checking the token alphabet.
    pub fn new(tokens: Vec<String>) -> Result<Self, InvalidToken> {
        if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
            return Err(InvalidToken(bad.clone()));
        }
        Ok(TokenList(tokens))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    /// Keeps tokens for which `keep` returns true.
    pub fn retain(mut self, mut keep: impl FnMut(&str) -> bool) -> Self {
        self.0.retain(|t| keep(t));
        self
    }
}

fn is_valid_token(t: &str) -> bool {
    !t.is_empty()
        && t.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

fn is_joiner(c: char) -> bool {
    matches!(
        c,
        '-' | '\u{2010}' | '\u{2011}' | '\u{00AD}' | '\'' | '\u{2018}' | '\u{2019}' | '\u{02BC}'
    )
}

/// Lowercases and splits text into alphanumeric tokens.
///
/// Hyphens and apostrophes are deleted so "Noise-Canceling" becomes one
/// token; any other non-alphanumeric character separates tokens. Accents
/// are folded away ("Crème" -> "creme"); characters with no ASCII form act
/// as separators.
pub fn normalize_tokenize(text: &str) -> TokenList {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.nfkd().filter(|c| !is_combining_mark(*c)) {
        if c.is_ascii_alphanumeric() {
            current.push(c.to_ascii_lowercase());
        } else if is_joiner(c) {
            continue;
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenList(tokens)
}

/// Drops every token found in the lexicon.
pub fn anonymize(tokens: TokenList, lexicon: &AnonymizationLexicon) -> TokenList {
    tokens.retain(|t| !lexicon.contains(t))
}

/// A small general-purpose English stopword list.
pub const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

pub fn english_stopwords() -> HashSet<String> {
    ENGLISH_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .flat_map(|l| normalize_tokenize(l).into_inner())
        .collect()
}

/// Normalization pipeline applied before every analysis.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    pub lexicon: Option<AnonymizationLexicon>,
    pub stopwords: Option<HashSet<String>>,
}

impl Preprocessor {
    /// Tokenize and anonymize with the shipped lexicon; stopwords kept.
    pub fn anonymizing() -> Self {
        Preprocessor {
            lexicon: Some(AnonymizationLexicon::default()),
            stopwords: None,
        }
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = Some(stopwords);
        self
    }

    pub fn process(&self, text: &str) -> TokenList {
        let mut tokens = normalize_tokenize(text);
        if let Some(lex) = &self.lexicon {
            tokens = anonymize(tokens, lex);
        }
        if let Some(stop) = &self.stopwords {
            tokens = tokens.retain(|t| !stop.contains(t));
        }
        tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(items: &[&str]) -> TokenList {
        TokenList::new(items.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn hyphenated_words_join() {
        assert_eq!(
            normalize_tokenize("Noise-Canceling Headphones"),
            toks(&["noisecanceling", "headphones"])
        );
        assert_eq!(
            normalize_tokenize("Gender-Neutral Clothing"),
            toks(&["genderneutral", "clothing"])
        );
        assert_eq!(
            normalize_tokenize("Men\u{2019}s Shaver"),
            toks(&["mens", "shaver"])
        );
    }

    #[test]
    fn punctuation_separates() {
        assert_eq!(
            normalize_tokenize("BB Cream, Green Tea!"),
            toks(&["bb", "cream", "green", "tea"])
        );
        assert_eq!(
            normalize_tokenize("a/b\tc\n(d) 4K"),
            toks(&["a", "b", "c", "d", "4k"])
        );
    }

    #[test]
    fn empty_text() {
        assert!(normalize_tokenize("").is_empty());
        assert!(normalize_tokenize(" -- !! ").is_empty());
    }

    #[test]
    fn accents_fold() {
        assert_eq!(
            normalize_tokenize("Crème Brûlée"),
            toks(&["creme", "brulee"])
        );
        assert_eq!(normalize_tokenize("tea\u{4e2d}set"), toks(&["tea", "set"]));
    }

    #[test]
    fn token_list_rejects_bad_tokens() {
        assert!(TokenList::new(vec!["Tea".into()]).is_err());
        assert!(TokenList::new(vec!["".into()]).is_err());
        assert!(TokenList::new(vec!["a-b".into()]).is_err());
    }

    #[test]
    fn anonymize_examples() {
        let lex = AnonymizationLexicon::default();
        assert_eq!(
            anonymize(toks(&["she", "loves", "tea"]), &lex),
            toks(&["loves", "tea"])
        );
        assert_eq!(
            anonymize(toks(&["asian", "rice", "cooker"]), &lex),
            toks(&["rice", "cooker"])
        );
        assert!(anonymize(TokenList::default(), &lex).is_empty());
    }

    #[test]
    fn stopwords_are_opt_in() {
        let text = "A kettle for the home";
        assert_eq!(Preprocessor::default().process(text).len(), 5);
        let p = Preprocessor::default().with_stopwords(english_stopwords());
        assert_eq!(p.process(text), toks(&["kettle", "home"]));
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_on_joined_output(text in "\\PC{0,80}") {
            let once = normalize_tokenize(&text);
            for t in once.iter() {
                prop_assert!(is_valid_token(t));
            }
            let twice = normalize_tokenize(&once.join());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn anonymize_shrinks_and_is_idempotent(text in "[a-zA-Z .,'-]{0,120}") {
            let lex = AnonymizationLexicon::default();
            let tokens = normalize_tokenize(&text);
            let once = anonymize(tokens.clone(), &lex);
            prop_assert!(once.len() <= tokens.len());
            prop_assert_eq!(anonymize(once.clone(), &lex), once);
        }
    }
}
