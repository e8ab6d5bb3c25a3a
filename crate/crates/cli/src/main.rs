//! `recbias`: generate persona recommendation corpora and compare groups.
//!
//! Exit status: 0 on success, 1 on configuration, input or endpoint errors,
//! 2 when generation finished with some cells still missing.

mod analyze;
mod generate;
mod validate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "recbias",
    version,
    about = "Persona product-recommendation bias audit"
)]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace); RUST_LOG overrides.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Query a chat-completions endpoint (or the offline mock) for every persona.
    Generate(generate::GenerateArgs),
    /// Compare marked groups against the unmarked group of an axis.
    Analyze(analyze::AnalyzeArgs),
    /// Print the combined table of a finished analysis.
    Report(analyze::ReportArgs),
    /// Check a corpus file and summarize its contents.
    Validate(validate::ValidateArgs),
}

fn main() -> ExitCode {
    // Usage errors exit 1; status 2 is reserved for partial generation.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log_level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Report(args) => analyze::report(args),
        Command::Validate(args) => validate::run(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
