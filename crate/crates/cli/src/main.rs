mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn run() -> CliResult<()> {
    let argv = config::merge(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            e.print()?;
            return Ok(());
        }
        Err(e) => {
            e.print()?;
            return Err(CliError::Usage);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::BadFlag("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::BadFlag(e.to_string()))?;
    }
    let out = cli.out.as_path();
    match &cli.command {
        Command::Ingest {
            exports,
            sum_duplicates,
            allow_churn,
        } => commands::ingest(out, exports, *sum_duplicates, *allow_churn),
        Command::Rca {
            rca_threshold,
            allow_churn,
        } => commands::rca(out, *rca_threshold, *allow_churn),
        Command::Indicators { ids, years } => commands::indicators(out, ids, years.as_deref()),
        Command::Test {
            indicators,
            reps,
            seed,
            min_candidates,
            scope,
            directions,
            periods,
            results,
        } => commands::test(
            out,
            &commands::TestArgs {
                indicators,
                reps: *reps,
                seed: *seed,
                min_candidates: *min_candidates,
                scope,
                directions,
                periods,
                results,
            },
        ),
        Command::Report {
            results,
            lall,
            reps,
            baseline_year,
        } => commands::report(
            out,
            &commands::ReportArgs {
                results,
                lall: lall.as_deref(),
                reps: *reps,
                baseline_year: *baseline_year,
            },
        ),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Usage) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
