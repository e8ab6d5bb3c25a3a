//! Weighted log-odds with an informative Dirichlet prior.
//!
//! For a word `w` with counts `c_ws` / `c_wu` in the marked / unmarked group
//! (group totals `C_s` / `C_u`) and prior pseudo-counts `α_w`, `α_0`:
//!
//! ```text
//! δ_w   = ln((c_ws + α_w) / (C_s − c_ws + α_0 − α_w))
//!       − ln((c_wu + α_w) / (C_u − c_wu + α_0 − α_w))
//! σ²_g  = 1/(c_wg + α_w) + 1/(C_g − c_wg + α_0 − α_w)
//! z_w   = δ_w / sqrt(σ²_s + σ²_u)
//! ```
//!
//! The prior is the word's relative frequency in the union of both groups,
//! so `α_0 = 1`. An optional additive smoothing constant is added to every
//! per-word count (never to the group totals) in both the log-odds and the
//! variances.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::preprocess::{merge_counts, GroupCounts};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarkedWordsError {
    #[error("cannot compare an empty group")]
    EmptyCorpus,
    #[error("word {0:?} has no prior weight")]
    WordNotInPrior(String),
    #[error("non-positive denominator for {word:?} ({value}); group consists of a single word")]
    NonPositiveDenominator { word: String, value: f64 },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Per-word Dirichlet pseudo-counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorVector {
    alpha: BTreeMap<String, f64>,
    alpha0: f64,
}

impl PriorVector {
    /// Builds a prior whose `alpha0` must equal the sum of the weights.
    pub fn new(alpha: BTreeMap<String, f64>, alpha0: f64) -> Result<Self, MarkedWordsError> {
        let prior = Self::stated(alpha, alpha0)?;
        let sum: f64 = prior.alpha.values().sum();
        if ((sum - alpha0) / alpha0).abs() > 1e-12 {
            return Err(MarkedWordsError::InvalidPrior(format!(
                "alpha0 {alpha0} differs from the weight sum {sum}"
            )));
        }
        Ok(prior)
    }

    /// Builds a prior from externally stated values without requiring
    /// `alpha0` to equal the weight sum. Used to replay published inputs
    /// that were rounded or computed from a different total.
    pub fn stated(alpha: BTreeMap<String, f64>, alpha0: f64) -> Result<Self, MarkedWordsError> {
        if !(alpha0.is_finite() && alpha0 > 0.0) {
            return Err(MarkedWordsError::InvalidPrior(format!("alpha0 = {alpha0}")));
        }
        if let Some((w, a)) = alpha.iter().find(|(_, a)| !(a.is_finite() && **a > 0.0)) {
            return Err(MarkedWordsError::InvalidPrior(format!(
                "alpha[{w:?}] = {a}"
            )));
        }
        Ok(PriorVector { alpha, alpha0 })
    }

    pub fn alpha(&self, word: &str) -> Option<f64> {
        self.alpha.get(word).copied()
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.alpha.iter().map(|(w, &a)| (w.as_str(), a))
    }
}

/// Relative frequencies of the combined corpus, `α_0 = 1`.
pub fn compute_prior(combined: &GroupCounts) -> Result<PriorVector, MarkedWordsError> {
    if combined.total() == 0 {
        return Err(MarkedWordsError::EmptyCorpus);
    }
    let total = combined.total() as f64;
    let alpha = combined
        .iter()
        .map(|(w, c)| (w.to_string(), c as f64 / total))
        .collect();
    PriorVector::new(alpha, 1.0)
}

/// Like [`compute_prior`] but divides by an explicitly supplied total.
///
/// `alpha0` is fixed at 1 regardless of the weight sum, so this goes through
/// [`PriorVector::stated`].
pub fn compute_prior_with_total(
    combined: &GroupCounts,
    total: f64,
) -> Result<PriorVector, MarkedWordsError> {
    if combined.is_empty() || total.is_nan() || total <= 0.0 {
        return Err(MarkedWordsError::EmptyCorpus);
    }
    let alpha = combined
        .iter()
        .map(|(w, c)| (w.to_string(), c as f64 / total))
        .collect();
    PriorVector::stated(alpha, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedWordsConfig {
    /// One-sided significance threshold on z.
    pub z_threshold: f64,
    /// Additive smoothing applied to every per-word count.
    pub laplace: f64,
    /// Minimum raw count in the favoured group for a word to be reported.
    pub min_count: u64,
}

impl Default for MarkedWordsConfig {
    fn default() -> Self {
        MarkedWordsConfig {
            z_threshold: 1.96,
            laplace: 0.0,
            min_count: 0,
        }
    }
}

impl MarkedWordsConfig {
    /// Default thresholds with +0.5 smoothing on every per-word count.
    pub fn paper_mode() -> Self {
        MarkedWordsConfig {
            laplace: 0.5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MarkedWordsError> {
        if !(self.z_threshold.is_finite() && self.z_threshold > 0.0) {
            return Err(MarkedWordsError::InvalidConfig(format!(
                "z_threshold must be > 0, got {}",
                self.z_threshold
            )));
        }
        if !(self.laplace.is_finite() && self.laplace >= 0.0) {
            return Err(MarkedWordsError::InvalidConfig(format!(
                "laplace must be >= 0, got {}",
                self.laplace
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOddsStat {
    pub word: String,
    pub delta: f64,
    pub var_marked: f64,
    pub var_unmarked: f64,
    pub z: f64,
}

/// Raw count of one word in one group together with the group total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordCount {
    pub count: f64,
    pub total: f64,
}

impl WordCount {
    pub fn new(count: f64, total: f64) -> Self {
        WordCount { count, total }
    }
}

/// Log-odds, variances and z for one word from scalar inputs.
///
/// This is the arithmetic core behind [`log_odds_stat`]; it accepts totals
/// that need not match any stored counts.
pub fn log_odds_from_counts(
    word: &str,
    marked: WordCount,
    unmarked: WordCount,
    alpha_w: f64,
    alpha0: f64,
    laplace: f64,
) -> Result<LogOddsStat, MarkedWordsError> {
    let side = |wc: WordCount| -> Result<(f64, f64), MarkedWordsError> {
        let hit = wc.count + laplace + alpha_w;
        let rest = (wc.total - (wc.count + laplace)) + (alpha0 - alpha_w);
        if rest.is_nan() || rest <= 0.0 {
            return Err(MarkedWordsError::NonPositiveDenominator {
                word: word.to_string(),
                value: rest,
            });
        }
        let log_odds = hit.ln() - rest.ln();
        let var = hit.recip() + rest.recip();
        Ok((log_odds, var))
    };
    let (lo_s, var_marked) = side(marked)?;
    let (lo_u, var_unmarked) = side(unmarked)?;
    let delta = lo_s - lo_u;
    Ok(LogOddsStat {
        word: word.to_string(),
        delta,
        var_marked,
        var_unmarked,
        z: delta / (var_marked + var_unmarked).sqrt(),
    })
}

/// Statistic for one word of the vocabulary covered by `prior`.
pub fn log_odds_stat(
    word: &str,
    marked: &GroupCounts,
    unmarked: &GroupCounts,
    prior: &PriorVector,
    config: &MarkedWordsConfig,
) -> Result<LogOddsStat, MarkedWordsError> {
    if marked.total() == 0 || unmarked.total() == 0 {
        return Err(MarkedWordsError::EmptyCorpus);
    }
    let alpha_w = prior
        .alpha(word)
        .ok_or_else(|| MarkedWordsError::WordNotInPrior(word.to_string()))?;
    log_odds_from_counts(
        word,
        WordCount::new(marked.get(word) as f64, marked.total() as f64),
        WordCount::new(unmarked.get(word) as f64, unmarked.total() as f64),
        alpha_w,
        prior.alpha0(),
        config.laplace,
    )
}

/// Statistics for every word used by either group, in alphabetical order.
pub fn all_log_odds(
    marked: &GroupCounts,
    unmarked: &GroupCounts,
    config: &MarkedWordsConfig,
) -> Result<Vec<LogOddsStat>, MarkedWordsError> {
    config.validate()?;
    if marked.total() == 0 || unmarked.total() == 0 {
        return Err(MarkedWordsError::EmptyCorpus);
    }
    let prior = compute_prior(&merge_counts(marked, unmarked))?;
    prior
        .iter()
        .map(|(w, _)| log_odds_stat(w, marked, unmarked, &prior, config))
        .collect()
}

fn by_z_desc(a: &LogOddsStat, b: &LogOddsStat) -> Ordering {
    b.z.total_cmp(&a.z).then_with(|| a.word.cmp(&b.word))
}

/// Words significantly over-represented in the marked group (`z > ε`),
/// sorted by z descending, ties alphabetical.
pub fn marked_words(
    marked: &GroupCounts,
    unmarked: &GroupCounts,
    config: &MarkedWordsConfig,
) -> Result<Vec<LogOddsStat>, MarkedWordsError> {
    let mut out: Vec<LogOddsStat> = all_log_odds(marked, unmarked, config)?
        .into_iter()
        .filter(|s| marked.get(&s.word) >= config.min_count && s.z > config.z_threshold)
        .collect();
    out.sort_by(by_z_desc);
    Ok(out)
}

/// Words significantly over-represented in the unmarked group (`z < −ε`),
/// most negative first, ties alphabetical.
pub fn unmarked_words(
    marked: &GroupCounts,
    unmarked: &GroupCounts,
    config: &MarkedWordsConfig,
) -> Result<Vec<LogOddsStat>, MarkedWordsError> {
    let mut out: Vec<LogOddsStat> = all_log_odds(marked, unmarked, config)?
        .into_iter()
        .filter(|s| unmarked.get(&s.word) >= config.min_count && s.z < -config.z_threshold)
        .collect();
    out.sort_by(|a, b| a.z.total_cmp(&b.z).then_with(|| a.word.cmp(&b.word)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn counts(items: &[(&str, u64)]) -> GroupCounts {
        items.iter().copied().collect()
    }

    fn toy_marked() -> GroupCounts {
        counts(&[
            ("rice", 14),
            ("facial", 5),
            ("green", 5),
            ("tea", 2),
            ("bb", 1),
            ("cream", 1),
        ])
    }

    fn toy_unmarked() -> GroupCounts {
        counts(&[
            ("smartwatch", 3),
            ("headphones", 3),
            ("reusable", 1),
            ("bottle", 2),
            ("coffee", 3),
        ])
    }

    #[test]
    fn prior_from_stated_total() {
        let combined = merge_counts(&toy_marked(), &toy_unmarked());
        let prior = compute_prior_with_total(&combined, 39.0).unwrap();
        assert_relative_eq!(prior.alpha("rice").unwrap(), 14.0 / 39.0);
        assert!((prior.alpha("rice").unwrap() - 0.359).abs() < 5e-4);
        assert!((prior.alpha("facial").unwrap() - 0.128).abs() < 5e-4);
        assert_eq!(prior.alpha0(), 1.0);
    }

    #[test]
    fn prior_from_recomputed_total() {
        let combined = merge_counts(&toy_marked(), &toy_unmarked());
        let prior = compute_prior(&combined).unwrap();
        assert_relative_eq!(prior.alpha("rice").unwrap(), 0.35);
        let sum: f64 = prior.iter().map(|(_, a)| a).sum();
        assert_relative_eq!(sum, prior.alpha0(), max_relative = 1e-12);
    }

    #[test]
    fn prior_single_word_and_empty() {
        let prior = compute_prior(&counts(&[("x", 5)])).unwrap();
        assert_eq!(prior.alpha("x"), Some(1.0));
        assert_eq!(
            compute_prior(&GroupCounts::default()),
            Err(MarkedWordsError::EmptyCorpus)
        );
    }

    #[test]
    fn prior_vector_checks() {
        let mut a = BTreeMap::new();
        a.insert("x".to_string(), 0.5);
        assert!(PriorVector::new(a.clone(), 1.0).is_err());
        assert!(PriorVector::new(a.clone(), 0.5).is_ok());
        assert!(PriorVector::stated(a.clone(), 1.0).is_ok());
        a.insert("y".to_string(), 0.0);
        assert!(PriorVector::stated(a, 1.0).is_err());
    }

    // Expected values below were computed independently with plain float
    // arithmetic in Python from the closed-form expressions.
    #[test]
    fn worked_example_stated_inputs() {
        let s = log_odds_from_counts(
            "rice",
            WordCount::new(14.0, 25.0),
            WordCount::new(0.0, 12.0),
            0.359,
            1.0,
            0.0,
        )
        .unwrap();
        assert!((s.delta - 3.774).abs() < 0.005, "delta {}", s.delta);
        assert_relative_eq!(s.delta, 3.7712219640534146, max_relative = 1e-12);
        assert_relative_eq!(s.var_marked, 0.1555460056955324, max_relative = 1e-12);
        assert_relative_eq!(s.var_unmarked, 2.864622985867052, max_relative = 1e-12);
        assert!((s.var_unmarked - 2.865).abs() < 5e-4);
        assert_relative_eq!(s.z, 2.170033670283466, max_relative = 1e-12);
        assert!(s.z > 1.96);
    }

    #[test]
    fn worked_example_paper_mode_smoothing() {
        let s = log_odds_from_counts(
            "rice",
            WordCount::new(14.0, 25.0),
            WordCount::new(0.0, 12.0),
            0.359,
            1.0,
            0.5,
        )
        .unwrap();
        assert_relative_eq!(s.delta, 2.9365482567567507, max_relative = 1e-12);
        assert_relative_eq!(s.z, 2.478679963006505, max_relative = 1e-12);
    }

    #[test]
    fn recomputed_totals_still_significant() {
        let cfg = MarkedWordsConfig::default();
        let sig = marked_words(&toy_marked(), &toy_unmarked(), &cfg).unwrap();
        let rice = sig
            .iter()
            .find(|s| s.word == "rice")
            .expect("rice significant");
        assert_relative_eq!(rice.delta, 3.5667889464147606, max_relative = 1e-12);
        assert_relative_eq!(rice.z, 2.0343027608094397, max_relative = 1e-12);
        assert!(sig.windows(2).all(|p| p[0].z >= p[1].z));
    }

    #[test]
    fn identical_groups_have_zero_delta() {
        let a = counts(&[("x", 3), ("y", 5)]);
        let cfg = MarkedWordsConfig::default();
        for s in all_log_odds(&a, &a, &cfg).unwrap() {
            assert_eq!(s.delta, 0.0);
            assert_eq!(s.z, 0.0);
        }
        assert!(marked_words(&a, &a, &cfg).unwrap().is_empty());
        assert!(unmarked_words(&a, &a, &cfg).unwrap().is_empty());
    }

    #[test]
    fn degenerate_single_word_group() {
        let a = counts(&[("x", 3)]);
        let b = counts(&[("x", 3), ("y", 1)]);
        let err = all_log_odds(&a, &b, &MarkedWordsConfig::paper_mode()).unwrap_err();
        assert!(matches!(
            err,
            MarkedWordsError::NonPositiveDenominator { .. }
        ));
        // without smoothing the prior keeps the denominator positive
        assert!(all_log_odds(&a, &b, &MarkedWordsConfig::default()).is_ok());
    }

    #[test]
    fn errors() {
        let a = counts(&[("x", 3)]);
        let cfg = MarkedWordsConfig::default();
        assert_eq!(
            marked_words(&a, &GroupCounts::default(), &cfg),
            Err(MarkedWordsError::EmptyCorpus)
        );
        let prior = compute_prior(&a).unwrap();
        assert!(matches!(
            log_odds_stat("zzz", &a, &a, &prior, &cfg),
            Err(MarkedWordsError::WordNotInPrior(_))
        ));
        let bad = MarkedWordsConfig {
            z_threshold: 0.0,
            ..cfg
        };
        assert!(marked_words(&a, &a, &bad).is_err());
    }

    #[test]
    fn min_count_filters_marked_side() {
        let cfg = MarkedWordsConfig {
            min_count: 15,
            ..Default::default()
        };
        assert!(marked_words(&toy_marked(), &toy_unmarked(), &cfg)
            .unwrap()
            .is_empty());
    }

    fn arb_counts() -> impl Strategy<Value = GroupCounts> {
        proptest::collection::btree_map("[a-h]", 1u64..30, 1..8)
            .prop_map(|m| m.into_iter().collect())
    }

    proptest! {
        #[test]
        fn swapping_groups_negates(a in arb_counts(), b in arb_counts(), lap in prop_oneof![Just(0.0), Just(0.5)]) {
            let cfg = MarkedWordsConfig { laplace: lap, ..Default::default() };
            let (Ok(ab), Ok(ba)) = (all_log_odds(&a, &b, &cfg), all_log_odds(&b, &a, &cfg)) else {
                return Ok(());
            };
            for (x, y) in ab.iter().zip(&ba) {
                prop_assert_eq!(&x.word, &y.word);
                prop_assert_eq!(x.delta, -y.delta);
                prop_assert_eq!(x.z, -y.z);
                prop_assert_eq!(x.var_marked + x.var_unmarked, y.var_unmarked + y.var_marked);
                prop_assert!(x.z.is_finite());
                prop_assert!(x.var_marked > 0.0 && x.var_unmarked > 0.0);
            }
        }

        #[test]
        fn delta_increases_with_marked_count(c in 0.0f64..50.0, extra in 1.0f64..20.0, alpha in 0.01f64..0.9) {
            let lo = log_odds_from_counts("w", WordCount::new(c, 100.0), WordCount::new(3.0, 40.0), alpha, 1.0, 0.0).unwrap();
            let hi = log_odds_from_counts("w", WordCount::new(c + extra, 100.0), WordCount::new(3.0, 40.0), alpha, 1.0, 0.0).unwrap();
            prop_assert!(hi.delta > lo.delta);
        }
    }
}
