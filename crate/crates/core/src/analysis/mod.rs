//! Pairwise comparisons of marked groups against the unmarked group of an
//! axis, and their file outputs.

mod render;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Gender, GroupSpec, Markedness, Race, TextField};
use crate::jsd::{self, JsdContribution, JsdError, LogBase};
use crate::markedwords::{self, LogOddsStat, MarkedWordsConfig, MarkedWordsError};
use crate::preprocess::{
    english_stopwords, AnonymizationLexicon, GroupCounts, Preprocessor, TokenList,
};
use crate::svm::{self, FeatureSpace, LinearModel, MeanStd, SvmError, SvmTaskConfig, TrainReport};

pub use render::{render_files, render_table, OutputFile, PairSummary, ResultSummary, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Race,
    Gender,
    Combined,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Race, Axis::Gender, Axis::Combined];

    /// White, Man, or White Man.
    pub fn unmarked(self) -> Selector {
        match self {
            Axis::Race => Selector::Race(Race::White),
            Axis::Gender => Selector::Gender(Gender::Man),
            Axis::Combined => Selector::Cell(GroupSpec::new(Race::White, Gender::Man)),
        }
    }

    /// Every selector on this axis other than the unmarked one.
    pub fn marked(self) -> Vec<Selector> {
        match self {
            Axis::Race => Race::ALL
                .iter()
                .filter(|r| r.markedness() == Markedness::Marked)
                .map(|&r| Selector::Race(r))
                .collect(),
            Axis::Gender => Gender::ALL
                .iter()
                .filter(|g| g.markedness() == Markedness::Marked)
                .map(|&g| Selector::Gender(g))
                .collect(),
            Axis::Combined => {
                let unmarked = self.unmarked();
                GroupSpec::all()
                    .into_iter()
                    .map(Selector::Cell)
                    .filter(|s| *s != unmarked)
                    .collect()
            }
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Axis::Race => "Race Groups",
            Axis::Gender => "Gender Groups",
            Axis::Combined => "Race-Gender Groups",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Race => "race",
            Axis::Gender => "gender",
            Axis::Combined => "combined",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "race" => Ok(Axis::Race),
            "gender" => Ok(Axis::Gender),
            "combined" | "race-gender" | "cell" => Ok(Axis::Combined),
            _ => Err(format!("unknown axis {s:?} (race, gender, combined)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MarkedWords,
    Jsd,
    Svm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MarkedWords, Method::Jsd, Method::Svm];

    /// Item text for marked words, item plus reason text otherwise.
    pub fn default_text_field(self) -> TextField {
        match self {
            Method::MarkedWords => TextField::Item,
            Method::Jsd | Method::Svm => TextField::Both,
        }
    }

    /// Only the classifier sees anonymized text by default.
    pub fn default_anonymize(self) -> bool {
        matches!(self, Method::Svm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MarkedWords => "marked-words",
            Method::Jsd => "jsd",
            Method::Svm => "svm",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "marked-words" | "markedwords" | "mw" => Ok(Method::MarkedWords),
            "jsd" => Ok(Method::Jsd),
            "svm" => Ok(Method::Svm),
            _ => Err(format!("unknown method {s:?} (marked-words, jsd, svm)")),
        }
    }
}

/// One side of a comparison: a race pooled over genders, a gender pooled
/// over races, or a single persona.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Selector {
    Race(Race),
    Gender(Gender),
    Cell(GroupSpec),
}

impl Selector {
    pub fn matches(&self, group: &GroupSpec) -> bool {
        match *self {
            Selector::Race(r) => group.race == r,
            Selector::Gender(g) => group.gender == g,
            Selector::Cell(c) => *group == c,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Selector::Race(r) => r.display_name().to_string(),
            Selector::Gender(g) => g.label().to_string(),
            Selector::Cell(c) => c.to_string(),
        }
    }

    pub fn slug(&self) -> String {
        match self {
            Selector::Race(r) => r.label().to_ascii_lowercase(),
            Selector::Gender(g) => g.label().to_ascii_lowercase(),
            Selector::Cell(c) => c.slug(),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsdConfig {
    pub base: LogBase,
    /// Rows kept in the contribution table.
    pub top_k: usize,
}

impl Default for JsdConfig {
    fn default() -> Self {
        JsdConfig {
            base: LogBase::Two,
            top_k: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodConfig {
    MarkedWords(MarkedWordsConfig),
    Jsd(JsdConfig),
    Svm(SvmTaskConfig),
}

impl MethodConfig {
    pub fn default_for(method: Method) -> Self {
        match method {
            Method::MarkedWords => MethodConfig::MarkedWords(MarkedWordsConfig::default()),
            Method::Jsd => MethodConfig::Jsd(JsdConfig::default()),
            Method::Svm => MethodConfig::Svm(SvmTaskConfig::default()),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            MethodConfig::MarkedWords(_) => Method::MarkedWords,
            MethodConfig::Jsd(_) => Method::Jsd,
            MethodConfig::Svm(_) => Method::Svm,
        }
    }
}

/// Complete, resolved settings of one analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub axis: Axis,
    pub text_field: TextField,
    pub anonymize: bool,
    pub remove_stopwords: bool,
    #[serde(flatten)]
    pub method: MethodConfig,
}

impl AnalysisConfig {
    pub fn new(method: Method, axis: Axis) -> Self {
        AnalysisConfig {
            axis,
            text_field: method.default_text_field(),
            anonymize: method.default_anonymize(),
            remove_stopwords: false,
            method: MethodConfig::default_for(method),
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::InvalidConfig(m));
        match &self.method {
            MethodConfig::MarkedWords(c) => c
                .validate()
                .map_err(|e| AnalysisError::InvalidConfig(e.to_string())),
            MethodConfig::Jsd(c) if c.top_k == 0 => bad("jsd top_k must be at least 1".into()),
            MethodConfig::Jsd(_) => Ok(()),
            MethodConfig::Svm(c) => {
                if !(c.train_fraction > 0.0 && c.train_fraction < 1.0) {
                    return bad(format!(
                        "train_fraction must be in (0, 1), got {}",
                        c.train_fraction
                    ));
                }
                if !(c.train.reg_c.is_finite() && c.train.reg_c > 0.0) {
                    return bad(format!("reg_c must be > 0, got {}", c.train.reg_c));
                }
                if c.train.max_epochs == 0 {
                    return bad("max_epochs must be at least 1".into());
                }
                if !(c.train.tol.is_finite() && c.train.tol > 0.0) {
                    return bad(format!("tol must be > 0, got {}", c.train.tol));
                }
                if c.top_k == 0 {
                    return bad("top_k must be at least 1".into());
                }
                Ok(())
            }
        }
    }

    fn preprocessor(&self) -> Preprocessor {
        let mut p = Preprocessor::default();
        if self.anonymize {
            p.lexicon = Some(AnonymizationLexicon::default());
        }
        if self.remove_stopwords {
            p = p.with_stopwords(english_stopwords());
        }
        p
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid analysis config: {0}")]
    InvalidConfig(String),
    #[error("corpus has no records for the unmarked group {group} of the {axis} axis")]
    MissingUnmarkedGroup { axis: Axis, group: String },
    #[error("corpus has no records for any marked group of the {axis} axis")]
    NoMarkedGroups { axis: Axis },
    #[error("{pair}: {source}")]
    MarkedWords {
        pair: String,
        #[source]
        source: MarkedWordsError,
    },
    #[error("{pair}: {source}")]
    Jsd {
        pair: String,
        #[source]
        source: JsdError,
    },
    #[error("{pair}: {source}")]
    Svm {
        pair: String,
        #[source]
        source: SvmError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedWordsResult {
    pub marked_total: u64,
    pub unmarked_total: u64,
    /// Every word, z descending.
    pub all: Vec<LogOddsStat>,
    /// z > threshold, z descending.
    pub marked: Vec<LogOddsStat>,
    /// z < −threshold, most negative first.
    pub unmarked: Vec<LogOddsStat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsdResult {
    pub divergence: f64,
    pub vocab_size: usize,
    pub contributions: Vec<JsdContribution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmResult {
    pub report: TrainReport,
    pub model: LinearModel,
    pub space: FeatureSpace,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairResult {
    MarkedWords(MarkedWordsResult),
    Jsd(JsdResult),
    Svm(SvmResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub marked: Selector,
    pub unmarked: Selector,
    pub n_marked_records: usize,
    pub n_unmarked_records: usize,
    pub result: PairResult,
}

impl PairOutcome {
    pub fn name(&self) -> String {
        format!("{} vs {}", self.marked, self.unmarked)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRun {
    pub config: AnalysisConfig,
    pub corpus_records: usize,
    pub pairs: Vec<PairOutcome>,
    /// Marked selectors with no records in the corpus.
    pub skipped: Vec<Selector>,
}

impl AnalysisRun {
    /// Mean ± std of test accuracy across pairs, for classifier runs.
    pub fn test_accuracy(&self) -> Option<MeanStd> {
        let acc: Vec<f64> = self
            .pairs
            .iter()
            .filter_map(|p| match &p.result {
                PairResult::Svm(s) => Some(s.report.test_accuracy),
                _ => None,
            })
            .collect();
        MeanStd::of(&acc)
    }
}

/// Marked selectors to compare and those skipped for lack of records.
pub fn plan(
    corpus: &Corpus,
    config: &AnalysisConfig,
) -> Result<(Vec<Selector>, Vec<Selector>), AnalysisError> {
    config.validate()?;
    let present = |s: &Selector| corpus.records().iter().any(|r| s.matches(&r.group));
    let unmarked = config.axis.unmarked();
    if !present(&unmarked) {
        return Err(AnalysisError::MissingUnmarkedGroup {
            axis: config.axis,
            group: unmarked.label(),
        });
    }
    let (run, skipped): (Vec<Selector>, Vec<Selector>) =
        config.axis.marked().into_iter().partition(present);
    if run.is_empty() {
        return Err(AnalysisError::NoMarkedGroups { axis: config.axis });
    }
    Ok((run, skipped))
}

fn documents(
    corpus: &Corpus,
    sel: Selector,
    config: &AnalysisConfig,
    pre: &Preprocessor,
) -> Vec<TokenList> {
    corpus
        .records_where(move |g| sel.matches(g))
        .map(|r| pre.process(&r.text(config.text_field)))
        .collect()
}

fn pooled_counts(docs: &[TokenList]) -> GroupCounts {
    let mut counts = GroupCounts::default();
    for d in docs {
        counts.add_tokens(d);
    }
    counts
}

/// Compares one marked selector against the axis's unmarked selector.
pub fn analyze_pair(
    corpus: &Corpus,
    config: &AnalysisConfig,
    marked: Selector,
) -> Result<PairOutcome, AnalysisError> {
    let unmarked = config.axis.unmarked();
    let pair = format!("{marked} vs {unmarked}");
    let pre = config.preprocessor();
    let docs_m = documents(corpus, marked, config, &pre);
    let docs_u = documents(corpus, unmarked, config, &pre);

    let result = match &config.method {
        MethodConfig::MarkedWords(mw) => {
            let (cm, cu) = (pooled_counts(&docs_m), pooled_counts(&docs_u));
            let err = |source| AnalysisError::MarkedWords {
                pair: pair.clone(),
                source,
            };
            let mut all = markedwords::all_log_odds(&cm, &cu, mw).map_err(err)?;
            all.sort_by(|a, b| b.z.total_cmp(&a.z).then_with(|| a.word.cmp(&b.word)));
            PairResult::MarkedWords(MarkedWordsResult {
                marked_total: cm.total(),
                unmarked_total: cu.total(),
                marked: markedwords::marked_words(&cm, &cu, mw).map_err(err)?,
                unmarked: markedwords::unmarked_words(&cm, &cu, mw).map_err(err)?,
                all,
            })
        }
        MethodConfig::Jsd(jc) => {
            let err = |source| AnalysisError::Jsd {
                pair: pair.clone(),
                source,
            };
            let (cm, cu) = (pooled_counts(&docs_m), pooled_counts(&docs_u));
            let p = jsd::to_distribution(&cm).map_err(err)?;
            let q = jsd::to_distribution(&cu).map_err(err)?;
            let contributions =
                jsd::word_contributions_with_base(&p, &q, jc.top_k, jc.base).map_err(err)?;
            PairResult::Jsd(JsdResult {
                divergence: jsd::jsd_with_base(&p, &q, jc.base).map_err(err)?,
                vocab_size: crate::preprocess::merge_counts(&cm, &cu).len(),
                contributions,
            })
        }
        MethodConfig::Svm(sc) => {
            let labels: Vec<bool> = std::iter::repeat_n(true, docs_m.len())
                .chain(std::iter::repeat_n(false, docs_u.len()))
                .collect();
            let docs: Vec<TokenList> = docs_m.iter().chain(&docs_u).cloned().collect();
            let (report, model, space) =
                svm::run_task(&docs, &labels, sc).map_err(|source| AnalysisError::Svm {
                    pair: pair.clone(),
                    source,
                })?;
            if !model.converged {
                log::warn!(
                    "{pair}: training stopped after {} epochs without converging",
                    model.epochs
                );
            }
            PairResult::Svm(SvmResult {
                report,
                model,
                space,
            })
        }
    };
    Ok(PairOutcome {
        marked,
        unmarked,
        n_marked_records: docs_m.len(),
        n_unmarked_records: docs_u.len(),
        result,
    })
}

/// Runs every pair of the axis in order.
pub fn run_analysis(
    corpus: &Corpus,
    config: &AnalysisConfig,
) -> Result<AnalysisRun, AnalysisError> {
    let (selectors, skipped) = plan(corpus, config)?;
    let pairs = selectors
        .into_iter()
        .map(|m| analyze_pair(corpus, config, m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AnalysisRun {
        config: config.clone(),
        corpus_records: corpus.len(),
        pairs,
        skipped,
    })
}
