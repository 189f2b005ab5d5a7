use std::path::{Path, PathBuf};
use std::sync::Arc;

use gsce_core::corpus::{self, CorpusError, CorpusFile, CORPUS_VERSION};
use gsce_core::eval::{aggregate, render_report, CompletenessMode, ReportFormat, Tolerance};
use gsce_core::llmclient::{Agent, Fault, HttpAgent, HttpConfig, ResponseCache};
use gsce_core::prompt::{self, Preset, PromptAssets};
use gsce_core::runner::{self, PromptKit, RunPlan, RunSettings, RunnerError};
use gsce_core::skillscript::Limits;
use gsce_core::RunResult;

use crate::args::{flag_pair, CommonRunArgs, ConfigFile, GenCorpusArgs, ReportArgs, RunArgs, SweepArgs, ValidateArgs};

/// A command failure with its exit code: 1 for runtime failures, 2 for
/// usage and configuration errors.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl ToString) -> Self {
        Failure { code: 2, kind: "usage", message: message.to_string() }
    }

    fn config(message: impl ToString) -> Self {
        Failure { code: 2, kind: "config", message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Failure { code: 1, kind: "runtime", message: message.to_string() }
    }
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        match e {
            RunnerError::Config(_) | RunnerError::Prompt(_) | RunnerError::EmptyGroundTruth(_) => Failure::config(e),
            RunnerError::Cache(_) | RunnerError::Io { .. } | RunnerError::BadResult { .. } => Failure::runtime(e),
        }
    }
}

type Outcome = Result<(), Failure>;

fn write_file(path: &Path, text: &str) -> Outcome {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Failure::runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn tolerance(pos: Option<f64>, yaw: Option<f64>) -> Result<Tolerance, Failure> {
    let d = Tolerance::default();
    Tolerance::new(pos.unwrap_or(d.pos_eps), yaw.unwrap_or(d.yaw_eps)).map_err(Failure::config)
}

fn report_format(s: Option<&str>) -> Result<ReportFormat, Failure> {
    s.unwrap_or("markdown").parse().map_err(Failure::usage)
}

pub fn gen_corpus(a: GenCorpusArgs) -> Outcome {
    let parts: Vec<usize> = a
        .counts
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::usage(format!("--counts must be three integers a,b,c, got `{}`", a.counts)))?;
    let counts: [usize; 3] = parts
        .try_into()
        .map_err(|_| Failure::usage(format!("--counts must be three integers a,b,c, got `{}`", a.counts)))?;
    let corpus = corpus::generate_corpus(a.seed, counts);
    write_file(&a.out, &corpus.to_json())?;
    println!("wrote {} tasks to {}", corpus.tasks.len(), a.out.display());
    Ok(())
}

pub fn validate(a: ValidateArgs) -> Outcome {
    let tol = tolerance(a.pos_eps, a.yaw_eps)?;
    let text =
        std::fs::read_to_string(&a.corpus).map_err(|e| Failure::config(format!("{}: {e}", a.corpus.display())))?;
    let corpus: CorpusFile = serde_json::from_str(&text).map_err(|e| Failure::config(CorpusError::Schema(e)))?;
    if corpus.version != CORPUS_VERSION {
        return Err(Failure::config(CorpusError::UnsupportedVersion(corpus.version)));
    }
    let mut seen = std::collections::HashSet::new();
    let mut failures = 0;
    for task in &corpus.tasks {
        let outcome = if seen.insert(task.id.as_str()) {
            corpus::validate_task(task, &tol)
        } else {
            Err(CorpusError::DuplicateId(task.id.clone()))
        };
        if let Err(e) = outcome {
            failures += 1;
            println!("FAIL {}: {e}", task.id);
        }
    }
    let n = corpus.tasks.len();
    println!("{}/{n} tasks valid", n - failures);
    if failures > 0 {
        return Err(Failure {
            code: 1,
            kind: "validation",
            message: format!("{failures} of {n} tasks failed validation"),
        });
    }
    Ok(())
}

pub fn report(a: ReportArgs) -> Outcome {
    let format = report_format(Some(&a.format))?;
    let mut results: Vec<RunResult> = Vec::new();
    for path in &a.inputs {
        results.extend(runner::read_results(path)?);
    }
    let text = render_report(&aggregate(&results), format);
    match a.out {
        Some(out) => write_file(&out, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(common: CommonRunArgs) -> Result<ConfigFile, Failure> {
    let file = match &common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    Ok(file.merge(common))
}

fn build_agent(cfg: &ConfigFile, corpus: &Arc<CorpusFile>) -> Result<Agent, Failure> {
    let name = cfg.agent.as_deref().ok_or_else(|| Failure::usage("--agent is required"))?;
    let open_cache = |dir: &PathBuf| ResponseCache::open(dir).map(Arc::new).map_err(Failure::runtime);
    let base = match name {
        "oracle" => Agent::Oracle { corpus: corpus.clone() },
        "replay" => {
            let dir = cfg.cache.as_ref().ok_or_else(|| Failure::usage("--agent replay needs --cache DIR"))?;
            return Ok(Agent::Replay { cache: open_cache(dir)?, strict: true, upstream: None });
        }
        "http" => {
            let endpoint = cfg.endpoint.clone().ok_or_else(|| Failure::usage("--agent http needs --endpoint URL"))?;
            if cfg.model.is_none() {
                return Err(Failure::usage("--agent http needs --model ID"));
            }
            let d = HttpConfig::default();
            let http = HttpConfig {
                base_url: endpoint,
                api_key_env: cfg.api_key_env.clone().unwrap_or(d.api_key_env),
                timeout_secs: cfg.timeout_secs.unwrap_or(d.timeout_secs),
                max_attempts: cfg.max_attempts.unwrap_or(d.max_attempts),
                max_concurrency: cfg.max_concurrency.unwrap_or(d.max_concurrency),
                min_interval_ms: cfg.min_interval_ms.unwrap_or(d.min_interval_ms),
                jitter_seed: cfg.seed.unwrap_or(d.jitter_seed),
                ..d
            };
            Agent::Http(Box::new(HttpAgent::new(http).map_err(Failure::config)?))
        }
        other => match other.strip_prefix("faulty:") {
            Some(fault) => {
                Agent::Faulty { corpus: corpus.clone(), fault: fault.parse::<Fault>().map_err(Failure::usage)? }
            }
            None => {
                return Err(Failure::usage(format!(
                    "unknown agent `{other}` (expected http, replay, oracle or faulty:<fault>)"
                )))
            }
        },
    };
    Ok(match &cfg.cache {
        Some(dir) => Agent::Replay { cache: open_cache(dir)?, strict: false, upstream: Some(Box::new(base)) },
        None => base,
    })
}

/// Corpus, agent and a plan skeleton shared by `run` and `sweep-k`.
fn prepare(cfg: &ConfigFile) -> Result<(RunPlan, Agent), Failure> {
    let tol = tolerance(cfg.pos_eps, cfg.yaw_eps)?;
    let corpus = match &cfg.corpus {
        Some(path) => corpus::load_corpus(path, &tol).map_err(Failure::config)?,
        None => corpus::default_corpus(),
    };
    let corpus = Arc::new(corpus);
    let agent = build_agent(cfg, &corpus)?;

    let library = match &cfg.examples_file {
        Some(path) => prompt::load_example_library(path).map_err(Failure::config)?,
        None => prompt::default_library(),
    };
    let assets = PromptAssets::default()
        .with_overrides(cfg.guidelines_file.as_deref(), cfg.skill_apis_file.as_deref(), cfg.constraints_file.as_deref())
        .map_err(Failure::config)?;
    let completeness = match cfg.completeness.as_deref().unwrap_or("lcs") {
        "lcs" => CompletenessMode::Lcs,
        "prefix" => CompletenessMode::Prefix,
        other => return Err(Failure::usage(format!("unknown completeness mode `{other}` (expected lcs or prefix)"))),
    };
    let defaults = RunSettings::default();
    let settings = RunSettings {
        model: cfg.model.clone().unwrap_or(defaults.model),
        temperature: cfg.temperature.unwrap_or(defaults.temperature),
        max_tokens: cfg.max_tokens.unwrap_or(defaults.max_tokens),
        tolerance: tol,
        completeness,
        limits: Limits { step_limit: cfg.step_limit.unwrap_or(defaults.limits.step_limit) },
    };
    if !(settings.temperature.is_finite() && settings.temperature >= 0.0) {
        return Err(Failure::config("temperature must be >= 0"));
    }
    let mut plan = RunPlan::new(corpus, vec![Preset::Gsce]);
    plan.settings = settings;
    plan.kit = Arc::new(PromptKit { library, assets });
    plan.repeats = cfg.repeats.unwrap_or(plan.repeats);
    plan.parallelism = cfg.parallelism.unwrap_or(plan.parallelism);
    Ok((plan, agent))
}

fn finish(cfg: &ConfigFile, results: &[RunResult], default_out: &str) -> Outcome {
    let format = report_format(cfg.format.as_deref())?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(default_out));
    runner::write_results(&out, results)?;
    let text = render_report(&aggregate(results), format);
    if let Some(path) = &cfg.report_out {
        write_file(path, &text)?;
    }
    print!("{text}");
    eprintln!("wrote {} results to {}", results.len(), out.display());
    Ok(())
}

pub fn run(a: RunArgs) -> Outcome {
    let mut cfg = load_config(a.common)?;
    if !a.methods.is_empty() {
        cfg.method = Some(a.methods);
    }
    cfg.k = a.k.or(cfg.k);
    cfg.cot = flag_pair(a.cot, a.no_cot).or(cfg.cot);
    cfg.constraint_impl = flag_pair(a.constraint_impl, a.no_constraint_impl).or(cfg.constraint_impl);

    let presets = cfg
        .method
        .clone()
        .unwrap_or_else(|| vec!["gsce".into()])
        .iter()
        .map(|m| m.parse::<Preset>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::usage)?;
    let (mut plan, agent) = prepare(&cfg)?;
    plan.presets = presets;
    plan.k = cfg.k.unwrap_or(prompt::DEFAULT_K);
    plan.cot = cfg.cot.unwrap_or(true);
    plan.constraint_impl = cfg.constraint_impl.unwrap_or(true);
    let results = runner::run_plan(&plan, &agent)?;
    finish(&cfg, &results, "results.jsonl")
}

pub fn sweep_k(a: SweepArgs) -> Outcome {
    let mut cfg = load_config(a.common)?;
    cfg.min = a.min.or(cfg.min);
    cfg.max = a.max.or(cfg.max);
    cfg.cot = flag_pair(a.cot, a.no_cot).or(cfg.cot);
    cfg.constraint_impl = flag_pair(a.constraint_impl, a.no_constraint_impl).or(cfg.constraint_impl);
    let (mut plan, agent) = prepare(&cfg)?;
    let min = cfg.min.unwrap_or(0);
    let max = cfg.max.unwrap_or(plan.kit.library.len());
    if min > max {
        return Err(Failure::usage(format!("--min {min} exceeds --max {max}")));
    }
    plan.presets = vec![Preset::Gsce];
    plan.cot = cfg.cot.unwrap_or(true);
    plan.constraint_impl = cfg.constraint_impl.unwrap_or(true);
    // validate every k before spending any requests
    for k in min..=max {
        plan.k = k;
        plan.validate()?;
    }
    let mut results = Vec::new();
    for k in min..=max {
        plan.k = k;
        results.extend(runner::run_plan(&plan, &agent)?);
    }
    runner::sort_results(&mut results);
    finish(&cfg, &results, "sweep_k.jsonl")
}
