use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use recbias::analysis::{
    analyze_pair, plan, render_files, render_table, AnalysisConfig, AnalysisRun, Axis, Method,
    MethodConfig, Summary,
};
use recbias::corpus::{load_corpus, TextField};
use recbias::jsd::LogBase;

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Corpus file (JSON Lines).
    #[arg(long)]
    corpus: PathBuf,

    /// marked-words, jsd or svm.
    #[arg(long)]
    method: Method,

    /// race, gender or combined.
    #[arg(long, default_value = "race")]
    axis: Axis,

    /// Output directory for tables, plot data and summary.json.
    #[arg(long)]
    out: PathBuf,

    /// item, reason or both (default depends on the method).
    #[arg(long)]
    text_field: Option<TextField>,

    /// Strip pronouns, race, gender and title terms (default for svm).
    #[arg(long, overrides_with = "no_anonymize")]
    anonymize: bool,

    #[arg(long, overrides_with = "anonymize")]
    no_anonymize: bool,

    /// Drop common English function words.
    #[arg(long)]
    remove_stopwords: bool,

    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,

    // marked words
    /// One-sided significance threshold.
    #[arg(long, help_heading = "Marked words")]
    z_threshold: Option<f64>,

    /// Additive smoothing on per-word counts.
    #[arg(long, help_heading = "Marked words")]
    laplace: Option<f64>,

    /// Shorthand for --laplace 0.5.
    #[arg(long, help_heading = "Marked words", conflicts_with = "laplace")]
    paper_mode: bool,

    /// Minimum raw count in the favoured group.
    #[arg(long, help_heading = "Marked words")]
    min_count: Option<u64>,

    // jsd
    /// 2 or e.
    #[arg(long, help_heading = "JSD")]
    log_base: Option<LogBase>,

    /// Rows in the contribution table (jsd) or feature lists (svm).
    #[arg(long)]
    top_k: Option<usize>,

    // svm
    #[arg(long, help_heading = "SVM")]
    seed: Option<u64>,

    #[arg(long, help_heading = "SVM")]
    reg_c: Option<f64>,

    #[arg(long, help_heading = "SVM")]
    train_fraction: Option<f64>,

    #[arg(long, help_heading = "SVM")]
    max_epochs: Option<usize>,

    /// Relative objective change treated as converged.
    #[arg(long, help_heading = "SVM")]
    tol: Option<f64>,

    /// Rank features by absolute coefficient.
    #[arg(long, help_heading = "SVM")]
    rank_by_abs: bool,
}

impl AnalyzeArgs {
    fn config(&self) -> Result<AnalysisConfig> {
        let mut cfg = AnalysisConfig::new(self.method, self.axis);
        if let Some(f) = self.text_field {
            cfg.text_field = f;
        }
        if self.anonymize {
            cfg.anonymize = true;
        }
        if self.no_anonymize {
            cfg.anonymize = false;
        }
        cfg.remove_stopwords = self.remove_stopwords;

        let mut stray = Vec::new();
        let mut note = |set: bool, flag: &str| {
            if set {
                stray.push(flag.to_string());
            }
        };
        match &mut cfg.method {
            MethodConfig::MarkedWords(mw) => {
                if let Some(z) = self.z_threshold {
                    mw.z_threshold = z;
                }
                if self.paper_mode {
                    mw.laplace = 0.5;
                }
                if let Some(l) = self.laplace {
                    mw.laplace = l;
                }
                if let Some(m) = self.min_count {
                    mw.min_count = m;
                }
                note(self.log_base.is_some(), "--log-base");
                note(self.top_k.is_some(), "--top-k");
                self.note_svm(&mut note);
            }
            MethodConfig::Jsd(j) => {
                if let Some(b) = self.log_base {
                    j.base = b;
                }
                if let Some(k) = self.top_k {
                    j.top_k = k;
                }
                self.note_marked_words(&mut note);
                self.note_svm(&mut note);
            }
            MethodConfig::Svm(s) => {
                if let Some(v) = self.seed {
                    s.train.seed = v;
                }
                if let Some(v) = self.reg_c {
                    s.train.reg_c = v;
                }
                if let Some(v) = self.train_fraction {
                    s.train_fraction = v;
                }
                if let Some(v) = self.max_epochs {
                    s.train.max_epochs = v;
                }
                if let Some(v) = self.tol {
                    s.train.tol = v;
                }
                if let Some(k) = self.top_k {
                    s.top_k = k;
                }
                s.rank_by_abs = self.rank_by_abs;
                self.note_marked_words(&mut note);
                note(self.log_base.is_some(), "--log-base");
            }
        }
        if !stray.is_empty() {
            bail!(
                "{} not applicable to --method {}",
                stray.join(", "),
                self.method
            );
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn note_marked_words(&self, note: &mut impl FnMut(bool, &str)) {
        note(self.z_threshold.is_some(), "--z-threshold");
        note(self.laplace.is_some(), "--laplace");
        note(self.paper_mode, "--paper-mode");
        note(self.min_count.is_some(), "--min-count");
    }

    fn note_svm(&self, note: &mut impl FnMut(bool, &str)) {
        note(self.seed.is_some(), "--seed");
        note(self.reg_c.is_some(), "--reg-c");
        note(self.train_fraction.is_some(), "--train-fraction");
        note(self.max_epochs.is_some(), "--max-epochs");
        note(self.tol.is_some(), "--tol");
        note(self.rank_by_abs, "--rank-by-abs");
    }
}

pub fn run(args: AnalyzeArgs) -> Result<ExitCode> {
    let config = args.config()?;
    let corpus = load_corpus(&args.corpus)
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    let (selectors, skipped) = plan(&corpus, &config)?;
    for s in &skipped {
        log::warn!("no records for {s}; skipping");
    }
    // Pairs are independent; collect keeps them in axis order.
    let pairs = selectors
        .par_iter()
        .map(|&m| analyze_pair(&corpus, &config, m))
        .collect::<Result<Vec<_>, _>>()?;
    let run = AnalysisRun {
        config,
        corpus_records: corpus.len(),
        pairs,
        skipped,
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let files = render_files(&run);
    for file in &files {
        let path = args.out.join(&file.name);
        std::fs::write(&path, &file.contents)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if !args.quiet {
        if let Some(table) = files.iter().find(|f| f.name == "table.txt") {
            print!("{}", table.contents);
        }
        eprintln!("wrote {} files to {}", files.len(), args.out.display());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct ReportArgs {
    /// An analysis output directory or its summary.json.
    path: PathBuf,

    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn report(args: ReportArgs) -> Result<ExitCode> {
    let path = if args.path.is_dir() {
        args.path.join("summary.json")
    } else {
        args.path.clone()
    };
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let summary: Summary =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let table = render_table(&summary);
    match &args.out {
        Some(out) => {
            std::fs::write(out, table).with_context(|| format!("writing {}", out.display()))?
        }
        None => print!("{table}"),
    }
    Ok(ExitCode::SUCCESS)
}
