//! Command-line front end. Stages talk to each other only through files in
//! the working directory.

mod config;
mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::PipelineConfig;

use crate::error::Error;
use crate::predict::{HistorySource, TaskSetup};

#[derive(Debug, Parser)]
#[command(name = "actpred", version, about = "Human activity extraction, clustering and prediction")]
pub struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Abort on the first malformed input line.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Directory holding inputs and stage outputs.
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert event phrases and survey activities into queries.
    Queries(QueriesArgs),
    /// Match queries, extract and normalize activity phrases, filter users.
    Extract(ExtractArgs),
    /// Embed the distinct normalized phrases.
    Embed,
    /// Cluster phrase vectors.
    #[command(subcommand)]
    Cluster(ClusterCommand),
    /// Score user profiles against the value lexicon.
    Values(ValuesArgs),
    /// Attach target clusters to users and split them.
    Label,
    /// Train a prediction model.
    Train(TrainArgs),
    /// Evaluate trained models on the test split.
    Eval(EvalArgs),
    /// Random-baseline report.
    Baseline(BaselineArgs),
    /// Generate a synthetic corpus with planted clusters.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct QueriesArgs {
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub survey: Option<PathBuf>,
    /// Extra lemma<TAB>past rows for the verb lexicon.
    #[arg(long)]
    pub verbs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub users: Option<PathBuf>,
    /// Negation patterns, one per line.
    #[arg(long)]
    pub negation: Option<PathBuf>,
    #[arg(long)]
    pub verbs: Option<PathBuf>,
    #[arg(long)]
    pub min_tweets: Option<usize>,
    #[arg(long)]
    pub min_activities: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum ClusterCommand {
    /// K-means with a fixed k.
    Fit {
        #[arg(long)]
        k: Option<usize>,
        /// Also write the centroid distance matrix.
        #[arg(long)]
        distances: bool,
    },
    /// Validity metrics for k = 2^n over a range of n.
    Sweep {
        #[arg(long)]
        n_min: Option<u32>,
        #[arg(long)]
        n_max: Option<u32>,
    },
}

#[derive(Debug, Args)]
pub struct ValuesArgs {
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// Also write per-cluster value scores from the labeled users.
    #[arg(long)]
    pub cluster_scores: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Output classes: all, top:N, or min:M.
    #[arg(long, default_value = "all", value_parser = parse_task)]
    pub task: TaskSetup,
    /// Variant name used in output file names.
    #[arg(long, default_value = "full")]
    pub name: String,
    #[arg(long)]
    pub no_attributes: bool,
    #[arg(long)]
    pub no_profile: bool,
    #[arg(long)]
    pub no_history: bool,
    #[arg(long, value_parser = parse_history)]
    pub history: Option<HistorySource>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Variant names to evaluate.
    #[arg(long = "model", default_values_t = vec!["full".to_string()])]
    pub models: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub acr_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub classes: usize,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Also score a random predictor on this many synthetic users.
    #[arg(long)]
    pub simulate: Option<usize>,
    #[arg(long)]
    pub acr_n: Option<usize>,
    /// Write CSV and JSON reports with this path stem.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub users: usize,
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_task(s: &str) -> Result<TaskSetup, String> {
    let bad = || format!("expected all, top:N or min:M, got {s:?}");
    match s.split_once(':') {
        None if s == "all" => Ok(TaskSetup::All),
        Some(("top", n)) => n.parse().map(TaskSetup::Top).map_err(|_| bad()),
        Some(("min", n)) => n.parse().map(TaskSetup::MinCount).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn parse_history(s: &str) -> Result<HistorySource, String> {
    match s {
        "tweets" => Ok(HistorySource::Tweets),
        "activities" => Ok(HistorySource::Activities),
        _ => Err(format!("expected tweets or activities, got {s:?}")),
    }
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_INPUT: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_INPUT,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    match stages::execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_strings() {
        assert_eq!(parse_task("all"), Ok(TaskSetup::All));
        assert_eq!(parse_task("top:50"), Ok(TaskSetup::Top(50)));
        assert_eq!(parse_task("min:100"), Ok(TaskSetup::MinCount(100)));
        assert!(parse_task("top").is_err());
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        assert_eq!(run(["actpred", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn missing_input_has_its_own_code() {
        let dir = tempfile::tempdir().unwrap();
        let wd = dir.path().to_str().unwrap();
        assert_eq!(run(["actpred", "--workdir", wd, "embed"]), EXIT_MISSING_INPUT);
    }
}
