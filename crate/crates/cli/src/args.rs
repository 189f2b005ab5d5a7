use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "gsce", version, about = "Prompt-method evaluation harness for LLM drone control code")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a task corpus deterministically from a seed.
    GenCorpus(GenCorpusArgs),
    /// Check every task's oracle program against its ground truth.
    Validate(ValidateArgs),
    /// Evaluate method presets over a corpus.
    Run(RunArgs),
    /// Aggregate one or more results files into a table.
    Report(ReportArgs),
    /// Run the gsce preset for each example count in a range.
    SweepK(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Tasks per family A,B,C.
    #[arg(long, default_value = "15,15,14")]
    pub counts: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub pos_eps: Option<f64>,
    #[arg(long)]
    pub yaw_eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results files (JSON lines); several files are merged.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Options shared by `run` and `sweep-k`. Every option can also come from
/// the JSON file given with `--config`; flags win.
#[derive(Debug, Args, Default)]
pub struct CommonRunArgs {
    /// JSON file with any of the options below (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus file; the bundled corpus is used when absent.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// http, replay, oracle or faulty:<flip_z_sign|ignore_body_frame|emit_prose>.
    #[arg(long)]
    pub agent: Option<String>,
    /// Base URL of an OpenAI-compatible endpoint, e.g. http://host:8000/v1.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Response cache directory. With replay it is read strictly; with any
    /// other agent new responses are recorded into it.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Results file (JSON lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub repeats: Option<u32>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub pos_eps: Option<f64>,
    #[arg(long)]
    pub yaw_eps: Option<f64>,
    /// lcs or prefix.
    #[arg(long)]
    pub completeness: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub step_limit: Option<usize>,
    /// Example library JSON replacing the bundled one.
    #[arg(long)]
    pub examples_file: Option<PathBuf>,
    #[arg(long)]
    pub guidelines_file: Option<PathBuf>,
    #[arg(long)]
    pub skill_apis_file: Option<PathBuf>,
    #[arg(long)]
    pub constraints_file: Option<PathBuf>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// In-flight request cap for the http agent.
    #[arg(long)]
    pub max_concurrency: Option<usize>,
    /// Minimum milliseconds between http request starts.
    #[arg(long)]
    pub min_interval_ms: Option<u64>,
    /// Report format printed after the run.
    #[arg(long)]
    pub format: Option<String>,
    /// Also write the report to this file.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    /// Presets to run; repeat the flag or separate with commas.
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, overrides_with = "no_cot")]
    pub cot: bool,
    #[arg(long, overrides_with = "cot")]
    pub no_cot: bool,
    #[arg(long, overrides_with = "no_constraint_impl")]
    pub constraint_impl: bool,
    #[arg(long, overrides_with = "constraint_impl")]
    pub no_constraint_impl: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    #[arg(long)]
    pub min: Option<usize>,
    #[arg(long)]
    pub max: Option<usize>,
    #[arg(long, overrides_with = "no_cot")]
    pub cot: bool,
    #[arg(long, overrides_with = "cot")]
    pub no_cot: bool,
    #[arg(long, overrides_with = "no_constraint_impl")]
    pub constraint_impl: bool,
    #[arg(long, overrides_with = "constraint_impl")]
    pub no_constraint_impl: bool,
}

pub fn flag_pair(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub corpus: Option<PathBuf>,
    pub agent: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub repeats: Option<u32>,
    pub parallelism: Option<usize>,
    pub seed: Option<u64>,
    pub pos_eps: Option<f64>,
    pub yaw_eps: Option<f64>,
    pub completeness: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub step_limit: Option<usize>,
    pub examples_file: Option<PathBuf>,
    pub guidelines_file: Option<PathBuf>,
    pub skill_apis_file: Option<PathBuf>,
    pub constraints_file: Option<PathBuf>,
    pub api_key_env: Option<String>,
    pub timeout_secs: Option<f64>,
    pub max_attempts: Option<u32>,
    pub max_concurrency: Option<usize>,
    pub min_interval_ms: Option<u64>,
    pub format: Option<String>,
    pub report_out: Option<PathBuf>,
    pub method: Option<Vec<String>>,
    pub k: Option<usize>,
    pub cot: Option<bool>,
    pub constraint_impl: Option<bool>,
    pub min: Option<usize>,
    pub max: Option<usize>,
}

impl ConfigFile {
    /// Overlay command-line values on top of the file.
    pub fn merge(mut self, c: CommonRunArgs) -> Self {
        macro_rules! over {
            ($($f:ident),*) => { $( if c.$f.is_some() { self.$f = c.$f; } )* };
        }
        over!(
            corpus,
            agent,
            endpoint,
            model,
            cache,
            out,
            repeats,
            parallelism,
            seed,
            pos_eps,
            yaw_eps,
            completeness,
            temperature,
            max_tokens,
            step_limit,
            examples_file,
            guidelines_file,
            skill_apis_file,
            constraints_file,
            api_key_env,
            timeout_secs,
            max_attempts,
            max_concurrency,
            min_interval_ms,
            format,
            report_out
        );
        self
    }
}
