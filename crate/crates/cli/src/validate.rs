use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use recbias::corpus::{load_corpus, parse_llm_response, GroupSpec, EXPECTED_PRODUCTS};

#[derive(Args)]
pub struct ValidateArgs {
    /// Corpus file (JSON Lines).
    corpus: PathBuf,

    /// Require exactly this many records for each of the 15 personas.
    #[arg(long)]
    expect_per_group: Option<usize>,

    /// Treat records with a product count other than 10 as errors.
    #[arg(long)]
    strict: bool,

    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct Report {
    path: String,
    records: usize,
    per_group: BTreeMap<String, usize>,
    nonconformant: Vec<String>,
    problems: Vec<String>,
    valid: bool,
}

pub fn run(args: ValidateArgs) -> Result<ExitCode> {
    let corpus = match load_corpus(&args.corpus) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: invalid: {e}", args.corpus.display());
            return Ok(ExitCode::from(1));
        }
    };

    let mut per_group: BTreeMap<GroupSpec, usize> = BTreeMap::new();
    let mut nonconformant = Vec::new();
    let mut problems = Vec::new();
    for r in corpus.records() {
        *per_group.entry(r.group).or_default() += 1;
        let id = format!("{} #{}", r.group, r.response_index);
        if !r.is_conformant() {
            nonconformant.push(format!("{id}: {} products", r.products.len()));
        }
        let stored: Vec<(String, String)> = r
            .products
            .iter()
            .map(|p| (p.name.clone(), p.reason.clone()))
            .collect();
        match parse_llm_response(&r.raw_response) {
            Ok(pairs) if pairs == stored => {}
            Ok(_) => problems.push(format!("{id}: raw_response does not match stored products")),
            Err(e) => problems.push(format!("{id}: raw_response no longer parses: {e}")),
        }
    }
    if let Some(n) = args.expect_per_group {
        for g in GroupSpec::all() {
            let got = per_group.get(&g).copied().unwrap_or(0);
            if got != n {
                problems.push(format!("{g}: {got} records, expected {n}"));
            }
        }
    }
    if args.strict {
        problems.extend(
            nonconformant
                .iter()
                .map(|n| format!("{n} (expected {EXPECTED_PRODUCTS})")),
        );
    }

    let report = Report {
        path: args.corpus.display().to_string(),
        records: corpus.len(),
        per_group: per_group.iter().map(|(g, n)| (g.to_string(), *n)).collect(),
        nonconformant,
        valid: problems.is_empty(),
        problems,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{}: {} records", report.path, report.records);
        for (g, n) in &per_group {
            println!("  {:<28} {n}", g.to_string());
        }
        if !report.nonconformant.is_empty() {
            println!(
                "{} records without exactly {EXPECTED_PRODUCTS} products",
                report.nonconformant.len()
            );
        }
        for p in &report.problems {
            println!("problem: {p}");
        }
        println!("{}", if report.valid { "valid" } else { "invalid" });
    }
    Ok(if report.valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
