//! Jensen-Shannon divergence between two word distributions and its exact
//! per-word decomposition.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::preprocess::GroupCounts;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JsdError {
    #[error("cannot build a distribution from an empty group")]
    EmptyCorpus,
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("distributions are identical; divergence is zero")]
    ZeroDivergence,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

/// Logarithm base for the divergence. Base 2 bounds JSD by 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }

    /// Largest possible JSD in this base (disjoint supports).
    pub fn max_divergence(self) -> f64 {
        match self {
            LogBase::Two => 1.0,
            LogBase::Natural => std::f64::consts::LN_2,
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2" | "two" | "bits" => Ok(LogBase::Two),
            "e" | "natural" | "nats" => Ok(LogBase::Natural),
            _ => Err(format!("unknown log base {s:?} (2 or e)")),
        }
    }
}

/// A probability distribution over words with strictly positive entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FreqDistribution {
    probs: BTreeMap<String, f64>,
}

impl FreqDistribution {
    /// Validates positivity and that the values sum to one within 1e-9.
    pub fn new(probs: BTreeMap<String, f64>) -> Result<Self, JsdError> {
        if let Some((w, p)) = probs.iter().find(|(_, p)| !(**p > 0.0 && **p <= 1.0)) {
            return Err(JsdError::InvalidDistribution(format!("p[{w:?}] = {p}")));
        }
        let sum: f64 = probs.values().sum();
        if !probs.is_empty() && (sum - 1.0).abs() > 1e-9 {
            return Err(JsdError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(FreqDistribution { probs })
    }

    pub fn get(&self, word: &str) -> f64 {
        self.probs.get(word).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(w, &p)| (w.as_str(), p))
    }
}

impl<S: AsRef<str>> FromIterator<(S, f64)> for FreqDistribution {
    /// Collects without validation; callers in tests pass normalized data.
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        FreqDistribution {
            probs: iter
                .into_iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(w, p)| (w.as_ref().to_string(), p))
                .collect(),
        }
    }
}

pub fn to_distribution(counts: &GroupCounts) -> Result<FreqDistribution, JsdError> {
    if counts.total() == 0 {
        return Err(JsdError::EmptyCorpus);
    }
    let total = counts.total() as f64;
    Ok(FreqDistribution {
        probs: counts
            .iter()
            .map(|(w, c)| (w.to_string(), c as f64 / total))
            .collect(),
    })
}

/// Pointwise JS term `½[p·log(p/m) + q·log(q/m)]`, `m = (p+q)/2`, with
/// `0·log 0 = 0`.
fn pointwise(p: f64, q: f64, base: LogBase) -> f64 {
    let m = 0.5 * (p + q);
    let term = |x: f64| if x > 0.0 { x * base.log(x / m) } else { 0.0 };
    // nonnegative analytically; clamp the rounding residue when p ≈ q
    (0.5 * (term(p) + term(q))).max(0.0)
}

fn vocabulary<'a>(p: &'a FreqDistribution, q: &'a FreqDistribution) -> BTreeSet<&'a str> {
    p.probs
        .keys()
        .chain(q.probs.keys())
        .map(String::as_str)
        .collect()
}

/// Jensen-Shannon divergence in base 2.
pub fn jsd(p: &FreqDistribution, q: &FreqDistribution) -> Result<f64, JsdError> {
    jsd_with_base(p, q, LogBase::Two)
}

pub fn jsd_with_base(
    p: &FreqDistribution,
    q: &FreqDistribution,
    base: LogBase,
) -> Result<f64, JsdError> {
    if p.is_empty() || q.is_empty() {
        return Err(JsdError::EmptyDistribution);
    }
    let total: f64 = vocabulary(p, q)
        .into_iter()
        .map(|w| pointwise(p.get(w), q.get(w), base))
        .sum();
    Ok(total.min(base.max_divergence()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FavoredGroup {
    Marked,
    Unmarked,
}

impl std::fmt::Display for FavoredGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FavoredGroup::Marked => "marked",
            FavoredGroup::Unmarked => "unmarked",
        })
    }
}

/// A word's share of the total divergence between two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsdContribution {
    pub word: String,
    pub contribution: f64,
    /// Percent of the total divergence.
    pub percent: f64,
    pub favored_group: FavoredGroup,
    /// Set when `p(word) == q(word)`; `favored_group` is then `Unmarked`.
    pub tie: bool,
}

/// Contributions of every word, largest first (ties alphabetical), truncated
/// to `top_k`. `p` is the marked group, `q` the unmarked group.
pub fn word_contributions(
    p: &FreqDistribution,
    q: &FreqDistribution,
    top_k: usize,
) -> Result<Vec<JsdContribution>, JsdError> {
    word_contributions_with_base(p, q, top_k, LogBase::Two)
}

pub fn word_contributions_with_base(
    p: &FreqDistribution,
    q: &FreqDistribution,
    top_k: usize,
    base: LogBase,
) -> Result<Vec<JsdContribution>, JsdError> {
    if p.is_empty() || q.is_empty() {
        return Err(JsdError::EmptyDistribution);
    }
    let terms: Vec<(&str, f64, f64, f64)> = vocabulary(p, q)
        .into_iter()
        .map(|w| {
            let (pw, qw) = (p.get(w), q.get(w));
            (w, pointwise(pw, qw, base), pw, qw)
        })
        .collect();
    let total: f64 = terms.iter().map(|t| t.1).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(JsdError::ZeroDivergence);
    }
    let mut out: Vec<JsdContribution> = terms
        .into_iter()
        .map(|(w, c, pw, qw)| JsdContribution {
            word: w.to_string(),
            contribution: c,
            percent: 100.0 * c / total,
            favored_group: if pw > qw {
                FavoredGroup::Marked
            } else {
                FavoredGroup::Unmarked
            },
            tie: pw == qw,
        })
        .collect();
    out.sort_by(|a, b| match b.contribution.total_cmp(&a.contribution) {
        Ordering::Equal => a.word.cmp(&b.word),
        other => other,
    });
    out.truncate(top_k);
    Ok(out)
}
