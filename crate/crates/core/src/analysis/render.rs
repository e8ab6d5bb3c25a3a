//! Output files of an analysis run.
//!
//! Every file starts with `#` header lines holding the full effective
//! configuration as JSON, so a report can be regenerated from its own
//! metadata plus the corpus. Output is byte-deterministic for a given run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::jsd::JsdContribution;
use crate::markedwords::LogOddsStat;
use crate::svm::{MeanStd, TrainReport};

use super::{AnalysisConfig, AnalysisRun, Method, PairOutcome, PairResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Machine-readable digest of a run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: AnalysisConfig,
    pub corpus_records: usize,
    pub skipped: Vec<String>,
    pub pairs: Vec<PairSummary>,
    /// Classifier runs only.
    pub train_accuracy: Option<MeanStd>,
    pub test_accuracy: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub marked: String,
    pub unmarked: String,
    pub n_marked_records: usize,
    pub n_unmarked_records: usize,
    pub files: Vec<String>,
    pub result: ResultSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResultSummary {
    MarkedWords {
        marked_total: u64,
        unmarked_total: u64,
        /// (word, z), z descending.
        marked_words: Vec<(String, f64)>,
        /// (word, z), most negative first.
        unmarked_words: Vec<(String, f64)>,
    },
    Jsd {
        divergence: f64,
        vocab_size: usize,
        top: Vec<JsdContribution>,
    },
    Svm {
        report: TrainReport,
    },
}

fn base_name(run: &AnalysisRun, pair: &PairOutcome) -> String {
    format!(
        "{}_{}_{}_vs_{}",
        run.config.method.method(),
        run.config.axis,
        pair.marked.slug(),
        pair.unmarked.slug()
    )
}

fn header(run: &AnalysisRun, pair: Option<&PairOutcome>) -> String {
    let mut out = String::new();
    let config = serde_json::to_string(&run.config).expect("config serializes");
    writeln!(out, "# config: {config}").unwrap();
    writeln!(out, "# corpus_records: {}", run.corpus_records).unwrap();
    if let Some(p) = pair {
        writeln!(
            out,
            "# pair: {} ({} records) vs {} ({} records)",
            p.marked, p.n_marked_records, p.unmarked, p.n_unmarked_records
        )
        .unwrap();
    }
    out
}

/// Left-aligned columns separated by two spaces, with a dashed rule under
/// the header.
fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(cell);
            if i + 1 < cells.len() {
                s.push_str(&" ".repeat(w - cell.chars().count()));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(rule.iter().map(String::as_str).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

/// Rows of a Group | Word | Z-Score table; the group name appears on the
/// first row of its block only.
fn z_rows(group: &str, words: &[(String, f64)], flip: bool, rows: &mut Vec<Vec<String>>) {
    if words.is_empty() {
        rows.push(vec![group.to_string(), "(none)".into(), String::new()]);
    }
    for (i, (word, z)) in words.iter().enumerate() {
        let z = if flip { -z } else { *z };
        let label = if i == 0 {
            group.to_string()
        } else {
            String::new()
        };
        rows.push(vec![label, word.clone(), format!("{z:.3}")]);
    }
}

fn word_z(stats: &[LogOddsStat]) -> Vec<(String, f64)> {
    stats.iter().map(|s| (s.word.clone(), s.z)).collect()
}

fn marked_words_table(
    marked: &str,
    unmarked: &str,
    m: &[(String, f64)],
    u: &[(String, f64)],
) -> String {
    let mut rows = Vec::new();
    z_rows(marked, m, false, &mut rows);
    z_rows(unmarked, u, true, &mut rows);
    text_table(&["Group", "Word", "Z-Score"], &rows)
}

const UNMARKED_NOTE: &str =
    "# rows of the unmarked group show -z, i.e. the score from that group's side\n";

/// All files of a run, pair files first and `summary.json` last.
pub fn render_files(run: &AnalysisRun) -> Vec<OutputFile> {
    let mut files = Vec::new();
    let mut pairs = Vec::new();
    for pair in &run.pairs {
        let base = base_name(run, pair);
        let head = header(run, Some(pair));
        let mut names = Vec::new();
        let mut push = |name: String, contents: String| {
            names.push(name.clone());
            files.push(OutputFile { name, contents });
        };
        let result = match &pair.result {
            PairResult::MarkedWords(mw) => {
                let mut tsv = head.clone();
                writeln!(tsv, "# marked_total: {}", mw.marked_total).unwrap();
                writeln!(tsv, "# unmarked_total: {}", mw.unmarked_total).unwrap();
                tsv.push_str("word\tdelta\tvar_marked\tvar_unmarked\tz\n");
                for s in &mw.all {
                    writeln!(
                        tsv,
                        "{}\t{:?}\t{:?}\t{:?}\t{:?}",
                        s.word, s.delta, s.var_marked, s.var_unmarked, s.z
                    )
                    .unwrap();
                }
                push(format!("{base}.tsv"), tsv);

                let (m, u) = (word_z(&mw.marked), word_z(&mw.unmarked));
                let txt = format!(
                    "{head}{UNMARKED_NOTE}{}",
                    marked_words_table(&pair.marked.label(), &pair.unmarked.label(), &m, &u)
                );
                push(format!("{base}.txt"), txt);
                ResultSummary::MarkedWords {
                    marked_total: mw.marked_total,
                    unmarked_total: mw.unmarked_total,
                    marked_words: m,
                    unmarked_words: u,
                }
            }
            PairResult::Jsd(j) => {
                let mut tsv = head.clone();
                writeln!(tsv, "# jsd: {:?}", j.divergence).unwrap();
                tsv.push_str("rank\tword\tcontribution\tpercent\tfavored_group\n");
                for (i, c) in j.contributions.iter().enumerate() {
                    writeln!(
                        tsv,
                        "{}\t{}\t{:?}\t{:?}\t{}",
                        i + 1,
                        c.word,
                        c.contribution,
                        c.percent,
                        c.favored_group
                    )
                    .unwrap();
                }
                push(format!("{base}.tsv"), tsv);

                let rows: Vec<Vec<String>> = j
                    .contributions
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let favored = match c.favored_group {
                            crate::jsd::FavoredGroup::Marked => pair.marked.label(),
                            crate::jsd::FavoredGroup::Unmarked => pair.unmarked.label(),
                        };
                        vec![
                            (i + 1).to_string(),
                            c.word.clone(),
                            format!("{:.6}", c.contribution),
                            format!("{:.2}", c.percent),
                            if c.tie { "tie".into() } else { favored },
                        ]
                    })
                    .collect();
                let txt = format!(
                    "{head}JSD = {:.6} over {} words\n\n{}",
                    j.divergence,
                    j.vocab_size,
                    text_table(
                        &["Rank", "Word", "Contribution", "Percent", "Favored"],
                        &rows
                    )
                );
                push(format!("{base}.txt"), txt);
                ResultSummary::Jsd {
                    divergence: j.divergence,
                    vocab_size: j.vocab_size,
                    top: j.contributions.clone(),
                }
            }
            PairResult::Svm(s) => {
                let mut model = head.clone();
                let mut buf = Vec::new();
                s.model
                    .write_text(&s.space, &mut buf)
                    .expect("writing to memory");
                model.push_str(&String::from_utf8(buf).expect("model text is UTF-8"));
                push(format!("{base}.model.txt"), model);

                let report = serde_json::json!({
                    "config": run.config,
                    "marked": pair.marked.label(),
                    "unmarked": pair.unmarked.label(),
                    "report": s.report,
                });
                push(
                    format!("{base}.report.json"),
                    serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                );

                let r = &s.report;
                let mut txt = head.clone();
                writeln!(
                    txt,
                    "train accuracy {:.4} ({} docs), test accuracy {:.4} ({} docs), vocabulary {}, {} after {} epochs\n",
                    r.train_accuracy,
                    r.n_train,
                    r.test_accuracy,
                    r.n_test,
                    r.vocab_size,
                    if r.converged { "converged" } else { "not converged" },
                    r.epochs
                )
                .unwrap();
                let mut rows = Vec::new();
                for (label, feats) in [
                    (pair.marked.label(), &r.top_features),
                    (pair.unmarked.label(), &r.bottom_features),
                ] {
                    for (i, (w, c)) in feats.iter().enumerate() {
                        let group = if i == 0 { label.clone() } else { String::new() };
                        rows.push(vec![group, w.clone(), format!("{c:.4}")]);
                    }
                }
                txt.push_str(&text_table(&["Group", "Word", "Coefficient"], &rows));
                push(format!("{base}.txt"), txt);
                ResultSummary::Svm {
                    report: s.report.clone(),
                }
            }
        };
        pairs.push(PairSummary {
            marked: pair.marked.label(),
            unmarked: pair.unmarked.label(),
            n_marked_records: pair.n_marked_records,
            n_unmarked_records: pair.n_unmarked_records,
            files: names,
            result,
        });
    }

    let acc = |f: fn(&TrainReport) -> f64| -> Option<MeanStd> {
        let v: Vec<f64> = pairs
            .iter()
            .filter_map(|p| match &p.result {
                ResultSummary::Svm { report } => Some(f(report)),
                _ => None,
            })
            .collect();
        MeanStd::of(&v)
    };
    let summary = Summary {
        config: run.config.clone(),
        corpus_records: run.corpus_records,
        skipped: run.skipped.iter().map(|s| s.label()).collect(),
        train_accuracy: acc(|r| r.train_accuracy),
        test_accuracy: acc(|r| r.test_accuracy),
        pairs,
    };
    files.push(OutputFile {
        name: "table.txt".into(),
        contents: render_table(&summary),
    });
    files.push(OutputFile {
        name: "summary.json".into(),
        contents: serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    });
    files
}

/// Combined human-readable table over all pairs of a run.
pub fn render_table(summary: &Summary) -> String {
    let config = serde_json::to_string(&summary.config).expect("config serializes");
    let mut out = format!(
        "# config: {config}\n# corpus_records: {}\n",
        summary.corpus_records
    );
    if !summary.skipped.is_empty() {
        writeln!(
            out,
            "# skipped (no records): {}",
            summary.skipped.join(", ")
        )
        .unwrap();
    }
    match summary.config.method.method() {
        Method::MarkedWords => {
            out.push_str(UNMARKED_NOTE);
            let mut rows = Vec::new();
            for p in &summary.pairs {
                if let ResultSummary::MarkedWords { marked_words, .. } = &p.result {
                    z_rows(&p.marked, marked_words, false, &mut rows);
                }
            }
            for p in &summary.pairs {
                if let ResultSummary::MarkedWords { unmarked_words, .. } = &p.result {
                    let label = format!("{} (vs {})", p.unmarked, p.marked);
                    z_rows(&label, unmarked_words, true, &mut rows);
                }
            }
            out.push_str(&text_table(&["Group", "Word", "Z-Score"], &rows));
        }
        Method::Jsd => {
            let mut rows = Vec::new();
            for p in &summary.pairs {
                if let ResultSummary::Jsd {
                    divergence, top, ..
                } = &p.result
                {
                    let words: Vec<&str> = top.iter().take(5).map(|c| c.word.as_str()).collect();
                    rows.push(vec![
                        format!("{} vs {}", p.marked, p.unmarked),
                        format!("{divergence:.6}"),
                        words.join(", "),
                    ]);
                }
            }
            out.push_str(&text_table(&["Pair", "JSD", "Top words"], &rows));
        }
        Method::Svm => {
            let mut rows = Vec::new();
            for p in &summary.pairs {
                if let ResultSummary::Svm { report } = &p.result {
                    let words: Vec<&str> = report
                        .top_features
                        .iter()
                        .take(5)
                        .map(|(w, _)| w.as_str())
                        .collect();
                    rows.push(vec![
                        format!("{} vs {}", p.marked, p.unmarked),
                        format!("{:.4}", report.train_accuracy),
                        format!("{:.4}", report.test_accuracy),
                        words.join(", "),
                    ]);
                }
            }
            out.push_str(&text_table(
                &["Pair", "Train acc", "Test acc", "Top words"],
                &rows,
            ));
            if let Some(acc) = summary.test_accuracy {
                writeln!(out, "\n{}: {acc}", summary.config.axis.title()).unwrap();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{run_analysis, Axis};
    use crate::corpus::toy_corpus;

    #[test]
    fn table_alignment() {
        let t = text_table(
            &["Group", "Word", "Z-Score"],
            &[
                vec!["Asian".into(), "rice".into(), "2.170".into()],
                vec!["".into(), "noisecanceling".into(), "1.000".into()],
            ],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "Group  Word            Z-Score");
        assert_eq!(lines[1], "-----  --------------  -------");
        assert_eq!(lines[2], "Asian  rice            2.170");
        assert_eq!(lines[3], "       noisecanceling  1.000");
    }

    #[test]
    fn toy_marked_words_files() {
        let run = run_analysis(
            &toy_corpus(),
            &AnalysisConfig::new(Method::MarkedWords, Axis::Race),
        )
        .unwrap();
        let files = render_files(&run);
        let names: Vec<&str> = files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "marked-words_race_asian_vs_white.tsv",
                "marked-words_race_asian_vs_white.txt",
                "table.txt",
                "summary.json"
            ]
        );
        for f in &files[..3] {
            assert!(
                f.contents.starts_with("# config: {\"axis\":\"race\""),
                "{}",
                f.name
            );
        }
        let txt = &files[1].contents;
        assert!(txt
            .lines()
            .any(|l| l.starts_with("Asian") && l.contains("rice")));
        let summary: Summary = serde_json::from_str(&files[3].contents).unwrap();
        assert_eq!(summary.config, run.config);
        assert_eq!(render_table(&summary), files[2].contents);
    }
}
