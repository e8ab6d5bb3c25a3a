use std::collections::BTreeMap;

use super::TokenList;

/// Word counts for one group and their sum.
///
/// Zero counts are never stored, and `total` always equals the sum of the
/// stored counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupCounts {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl GroupCounts {
    pub fn get(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct words.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn add(&mut self, word: &str, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(word.to_string()).or_insert(0) += n;
        self.total += n;
    }

    pub fn add_tokens(&mut self, tokens: &TokenList) {
        for t in tokens.iter() {
            self.add(t, 1);
        }
    }
}

impl<S: AsRef<str>> FromIterator<(S, u64)> for GroupCounts {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        let mut out = GroupCounts::default();
        for (w, n) in iter {
            out.add(w.as_ref(), n);
        }
        out
    }
}

pub fn count_words(tokens: &TokenList) -> GroupCounts {
    let mut out = GroupCounts::default();
    out.add_tokens(tokens);
    out
}

pub fn merge_counts(a: &GroupCounts, b: &GroupCounts) -> GroupCounts {
    let mut out = a.clone();
    for (w, n) in b.iter() {
        out.add(w, n);
    }
    out
}
