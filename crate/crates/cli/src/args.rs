use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "relspace", version, about = "Relatedness indicators and resampling tests for trade panels")]
pub struct Cli {
    /// Directory holding every stage's artifacts.
    #[arg(long, global = true, default_value = "relspace-out")]
    pub out: PathBuf,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// `key = value` file with flag defaults; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read long-format exports and write one grid per year.
    #[command(args_override_self = true)]
    Ingest {
        /// CSV with columns year,country,product,value.
        #[arg(long)]
        exports: PathBuf,
        /// Add up repeated (year, country, product) records instead of failing.
        #[arg(long)]
        sum_duplicates: bool,
        /// Drop codes with zero totals from the affected years instead of failing.
        #[arg(long)]
        allow_churn: bool,
    },

    /// Binary and continuous RCA for every panel year.
    #[command(args_override_self = true)]
    Rca {
        #[arg(long, default_value_t = 1.0)]
        rca_threshold: f64,
        #[arg(long)]
        allow_churn: bool,
    },

    /// Indicator matrices for chosen ids and baseline years.
    #[command(args_override_self = true)]
    Indicators {
        /// Comma-separated ids, `headline` or `all`.
        #[arg(long, visible_alias = "indicators", default_value = "all")]
        ids: String,
        /// Comma-separated baseline years; all RCA years when omitted.
        #[arg(long)]
        years: Option<String>,
    },

    /// Resampling tests over year pairs.
    #[command(args_override_self = true)]
    Test {
        #[arg(long, visible_alias = "ids", default_value = "headline")]
        indicators: String,
        #[arg(long, default_value_t = relspace::bootstrap::DEFAULT_REPETITIONS)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        /// Slices with fewer candidates are skipped.
        #[arg(long, default_value_t = relspace::bootstrap::DEFAULT_MIN_CANDIDATES)]
        min_candidates: usize,
        /// Comma-separated from pooled, product, country.
        #[arg(long, default_value = "pooled")]
        scope: String,
        /// Comma-separated from gain, loss.
        #[arg(long, default_value = "gain,loss")]
        directions: String,
        /// `all`, `length=k`, or pairs like `2012-2013,2013-2015`.
        #[arg(long, default_value = "all")]
        periods: String,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "results.csv")]
        results: String,
    },

    /// Tables and plot data from RCA files and test results.
    #[command(args_override_self = true)]
    Report {
        #[arg(long, default_value = "results.csv")]
        results: String,
        /// Product-to-group concordance (product,group_id[,group_name]).
        #[arg(long)]
        lall: Option<PathBuf>,
        /// Repetitions used by the tests; sets the plotting floor for p = 0.
        #[arg(long, default_value_t = relspace::bootstrap::DEFAULT_REPETITIONS)]
        reps: usize,
        /// Year for the decomposition diagnostics; earliest RCA year by default.
        #[arg(long)]
        baseline_year: Option<i32>,
    },
}
