//! Command-line front end for mixed-data distances: distance matrices,
//! low-dimensional configurations, variable importance, reference
//! tables, and simulation studies, all driven by a config file and/or
//! flags.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ImportanceMetric, SimulateParams, StudyKind, TableKind, TableParams};
use config::CommonArgs;
use mixdist::error::Result;

#[derive(Parser)]
#[command(
    name = "mixdist",
    version,
    about = "Commensurable distances for mixed numeric/categorical data",
    propagate_version = true
)]
struct Cli {
    /// Cap the worker pool (default: all available cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the pairwise distance matrix of a dataset
    Dist {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the upper triangle as one value per line
        #[arg(long)]
        condensed: bool,
    },
    /// Embed a dataset's distances in k dimensions (classical MDS)
    Mds {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of dimensions
        #[arg(long, default_value_t = 2, value_name = "K")]
        k: usize,
    },
    /// Rank variables by their leave-one-out effect on the distances
    Importance {
        #[command(flatten)]
        common: CommonArgs,
        /// What the removal effect is measured on
        #[arg(long, value_enum, default_value_t = ImportanceMetric::Distance)]
        metric: ImportanceMetric,
        /// Dimensions for the mds metric
        #[arg(long, default_value_t = 2, value_name = "K")]
        k: usize,
        /// Also write the report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Write a reference table of expected distances
    Tables {
        /// Which table to produce
        #[arg(value_enum)]
        which: TableKind,
        /// Sample size (numeric-mc samples; uniform-expected/skew-profile
        /// frequency-based entries)
        #[arg(long, default_value_t = 160, value_name = "N")]
        n: usize,
        /// Replications for numeric-mc
        #[arg(long, default_value_t = 200, value_name = "R")]
        reps: usize,
        /// Number of categories
        #[arg(long, default_value_t = 2, value_name = "Q")]
        q: usize,
        /// Rare-category emphasis of the Hennig-Liao entries
        #[arg(long, default_value_t = mixdist::catdissim::DEFAULT_PHI, value_name = "PHI")]
        phi: f64,
        /// Smoothing floor of the Kullback-Leibler entries
        #[arg(long, default_value_t = mixdist::catdissim::DEFAULT_KL_EPSILON, value_name = "EPS")]
        kl_epsilon: f64,
        /// Dissimilarity for skew-profile (e.g. matching, indicator_cds,
        /// tvd_assoc)
        #[arg(long, value_name = "NAME")]
        dissim: Option<String>,
        /// Seed for numeric-mc sampling
        #[arg(long, default_value_t = 0, value_name = "SEED")]
        seed: u64,
        /// Output directory (created if missing)
        #[arg(long, default_value = ".", value_name = "DIR")]
        out: PathBuf,
    },
    /// Run a simulation study and write tidy records
    Simulate {
        /// Which study to run
        #[arg(value_enum)]
        study: StudyKind,
        /// Number of replications
        #[arg(long, default_value_t = 20, value_name = "R")]
        reps: usize,
        /// Observations per replication
        #[arg(long, default_value_t = 500, value_name = "N")]
        n: usize,
        /// Observed variables (variable-effects)
        #[arg(long, default_value_t = 6, value_name = "P")]
        p: usize,
        /// Category counts of the discretized variables (variable-effects)
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "2,3,5,9",
            value_name = "LIST"
        )]
        cats: Vec<usize>,
        /// Category counts to sweep (retrieval)
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "2,3,5,9",
            value_name = "LIST"
        )]
        q: Vec<usize>,
        /// Base seed; replications derive their own streams
        #[arg(long, default_value_t = 0, value_name = "SEED")]
        seed: u64,
        /// Also write per-cell summaries (mean, sd, quartiles)
        #[arg(long)]
        summarize: bool,
        /// Output directory (created if missing)
        #[arg(long, default_value = ".", value_name = "DIR")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dist { common, condensed } => {
            let run = common.resolve()?;
            commands::init_threads(cli.threads.or(run.threads))?;
            commands::cmd_dist(&run, condensed)
        }
        Command::Mds { common, k } => {
            let run = common.resolve()?;
            commands::init_threads(cli.threads.or(run.threads))?;
            commands::cmd_mds(&run, k)
        }
        Command::Importance {
            common,
            metric,
            k,
            json,
        } => {
            let run = common.resolve()?;
            commands::init_threads(cli.threads.or(run.threads))?;
            commands::cmd_importance(&run, metric, k, json)
        }
        Command::Tables {
            which,
            n,
            reps,
            q,
            phi,
            kl_epsilon,
            dissim,
            seed,
            out,
        } => {
            commands::init_threads(cli.threads)?;
            commands::cmd_tables(
                which,
                &TableParams {
                    n,
                    reps,
                    q,
                    phi,
                    kl_epsilon,
                    dissim,
                    seed,
                    out,
                },
            )
        }
        Command::Simulate {
            study,
            reps,
            n,
            p,
            cats,
            q,
            seed,
            summarize,
            out,
        } => {
            commands::init_threads(cli.threads)?;
            commands::cmd_simulate(
                study,
                &SimulateParams {
                    reps,
                    n,
                    p,
                    cats,
                    q,
                    seed,
                    summarize,
                    out,
                },
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            // One-line, machine-parsable usage error.
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
