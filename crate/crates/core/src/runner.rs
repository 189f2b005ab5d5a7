//! Evaluation orchestration: compose, complete, extract, interpret, score.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusFile, Task};
use crate::dronesim::Simulator;
use crate::eval::{filter_noops, score_run_with, CompletenessMode, RunErrorCategory, RunResult, Tolerance};
use crate::llmclient::{cache_key, Agent, AgentError, CacheError, ChatRequest, DEFAULT_MAX_TOKENS};
use crate::prompt::{compose, validate_library, ExampleEntry, MethodConfig, Preset, PromptAssets, PromptError};
use crate::skillscript::{self, Limits};

pub const DEFAULT_REPEATS: u32 = 3;
pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid plan: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("task `{0}` has an empty ground truth")]
    EmptyGroundTruth(String),
    #[error("results I/O on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("results file {path}, line {line}: {source}")]
    BadResult { path: String, line: usize, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    Fenced,
    WholeResponse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedCode {
    pub source: String,
    pub mode: ExtractionMode,
}

/// Pull program text out of a model response.
///
/// Every triple-backtick block (with or without an info string) is taken in
/// order and joined. An unterminated block runs to the end of the response.
/// Without any fence the whole response is used. `None` means there is no
/// code at all.
pub fn extract_code(response: &str) -> Option<ExtractedCode> {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(Vec::new()),
            }
        } else if let Some(block) = current.as_mut() {
            block.push(line);
        }
    }
    if let Some(block) = current {
        blocks.push(block);
    }
    let (source, mode) = if blocks.is_empty() {
        (response.trim().to_string(), ExtractionMode::WholeResponse)
    } else {
        let joined = blocks.iter().map(|b| b.join("\n")).collect::<Vec<_>>().join("\n");
        (joined.trim().to_string(), ExtractionMode::Fenced)
    };
    (!source.is_empty()).then_some(ExtractedCode { source, mode })
}

/// Per-run settings shared by every run of a plan.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub tolerance: Tolerance,
    pub completeness: CompletenessMode,
    pub limits: Limits,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            model: "unspecified".into(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            tolerance: Tolerance::default(),
            completeness: CompletenessMode::Lcs,
            limits: Limits::default(),
        }
    }
}

/// Shared prompt material.
#[derive(Debug, Clone)]
pub struct PromptKit {
    pub library: Vec<ExampleEntry>,
    pub assets: PromptAssets,
}

impl Default for PromptKit {
    fn default() -> Self {
        PromptKit { library: crate::prompt::default_library(), assets: PromptAssets::default() }
    }
}

/// Method configuration for `preset` under the plan-wide example settings.
/// Presets without examples ignore `k`, `cot` and `constraint_impl`.
pub fn method_config(preset: Preset, k: usize, cot: bool, constraint_impl: bool) -> MethodConfig {
    let mut c = MethodConfig::preset(preset);
    if c.include_examples {
        c.k = k;
        c.cot = cot;
        c.constraint_impl = constraint_impl;
    }
    c
}

fn failed(mut result: RunResult, category: RunErrorCategory, message: String) -> RunResult {
    result.success = false;
    result.error_category = Some(category);
    result.error_message = Some(message);
    result
}

/// One end-to-end run on a fresh simulator. Stage failures are recorded in
/// the result; only fatal cache errors and prompt configuration errors are
/// returned as `Err`.
#[allow(clippy::too_many_arguments)]
pub fn execute_run(
    task: &Task,
    preset: Preset,
    config: &MethodConfig,
    repeat_index: u32,
    agent: &Agent,
    kit: &PromptKit,
    settings: &RunSettings,
) -> Result<RunResult, RunnerError> {
    if task.ground_truth.is_empty() {
        return Err(RunnerError::EmptyGroundTruth(task.id.clone()));
    }
    let bundle = compose(config, &kit.library, &kit.assets, &task.query)?;
    let request = ChatRequest {
        temperature: settings.temperature,
        max_tokens: settings.max_tokens,
        ..ChatRequest::from_bundle(&bundle, settings.model.clone(), repeat_index)
    };
    let base = RunResult {
        task_id: task.id.clone(),
        method: preset,
        model: settings.model.clone(),
        k: bundle.manifest.examples,
        cot: bundle.manifest.cot,
        constraint_impl: bundle.manifest.constraint_impl,
        repeat_index,
        success: false,
        completeness: 0.0,
        error_category: None,
        error_message: None,
        actual_transitions: Vec::new(),
        response_ref: cache_key(&request),
    };

    let response = match agent.complete(&request) {
        Ok(text) => text,
        Err(AgentError::Llm(e)) => return Ok(failed(base, RunErrorCategory::LlmError, e.to_string())),
        Err(AgentError::Cache(e)) => return Err(e.into()),
    };
    let Some(code) = extract_code(&response) else {
        return Ok(failed(base, RunErrorCategory::NoCode, "response contains no code".into()));
    };
    let program = match skillscript::parse(&code.source) {
        Ok(p) => p,
        Err(e) => return Ok(failed(base, e.category.into(), e.to_string())),
    };

    let mut sim = Simulator::default();
    let outcome = skillscript::interpret(&program, &mut sim, settings.limits);
    let actual = filter_noops(sim.log(), &settings.tolerance);
    let score = score_run_with(&actual, &task.ground_truth, &settings.tolerance, settings.completeness)
        .map_err(|_| RunnerError::EmptyGroundTruth(task.id.clone()))?;
    let mut result = RunResult { completeness: score.completeness, actual_transitions: actual, ..base };
    match outcome {
        Ok(()) => result.success = score.success,
        Err(e) => result = failed(result, e.category.into(), e.to_string()),
    }
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub corpus: Arc<CorpusFile>,
    pub presets: Vec<Preset>,
    pub k: usize,
    pub cot: bool,
    pub constraint_impl: bool,
    pub repeats: u32,
    pub parallelism: usize,
    pub settings: RunSettings,
    pub kit: Arc<PromptKit>,
}

impl RunPlan {
    pub fn new(corpus: Arc<CorpusFile>, presets: Vec<Preset>) -> Self {
        RunPlan {
            corpus,
            presets,
            k: crate::prompt::DEFAULT_K,
            cot: true,
            constraint_impl: true,
            repeats: DEFAULT_REPEATS,
            parallelism: DEFAULT_PARALLELISM,
            settings: RunSettings::default(),
            kit: Arc::new(PromptKit::default()),
        }
    }

    /// Fail fast on anything that would make every run of a preset invalid.
    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.repeats == 0 {
            return Err(RunnerError::Config("repeats must be at least 1".into()));
        }
        if self.presets.is_empty() {
            return Err(RunnerError::Config("no method presets selected".into()));
        }
        if self.parallelism == 0 {
            return Err(RunnerError::Config("parallelism must be at least 1".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for t in &self.corpus.tasks {
            if !ids.insert(&t.id) {
                return Err(RunnerError::Config(format!("duplicate task id `{}`", t.id)));
            }
            if t.ground_truth.is_empty() {
                return Err(RunnerError::EmptyGroundTruth(t.id.clone()));
            }
        }
        for &preset in &self.presets {
            let config = self.config_for(preset);
            config.validate()?;
            if config.include_examples && config.k > self.kit.library.len() {
                return Err(PromptError::KExceedsLibrary { k: config.k, len: self.kit.library.len() }.into());
            }
            if config.include_examples && config.constraint_impl && config.k > 0 {
                if let Err(e) = validate_library(&self.kit.library, &self.kit.assets.constraint_ids(), config.k) {
                    log::warn!("{preset}: {e}");
                }
            }
        }
        Ok(())
    }

    pub fn config_for(&self, preset: Preset) -> MethodConfig {
        method_config(preset, self.k, self.cot, self.constraint_impl)
    }

    /// Every (task, preset, repeat) triple exactly once.
    pub fn jobs(&self) -> Vec<(usize, Preset, u32)> {
        let mut jobs = Vec::new();
        for i in 0..self.corpus.tasks.len() {
            for &p in &self.presets {
                for r in 0..self.repeats {
                    jobs.push((i, p, r));
                }
            }
        }
        jobs
    }
}

/// Canonical results order: task, method, example settings, repeat.
pub fn sort_results(results: &mut [RunResult]) {
    results.sort_by(|a, b| {
        (&a.task_id, a.method, &a.model, a.k, a.cot, a.constraint_impl, a.repeat_index).cmp(&(
            &b.task_id,
            b.method,
            &b.model,
            b.k,
            b.cot,
            b.constraint_impl,
            b.repeat_index,
        ))
    });
}

/// Execute every job with at most `plan.parallelism` runs in flight and
/// return the results in canonical order.
pub fn run_plan(plan: &RunPlan, agent: &Agent) -> Result<Vec<RunResult>, RunnerError> {
    plan.validate()?;
    let jobs = plan.jobs();
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let sink: Mutex<Vec<RunResult>> = Mutex::new(Vec::with_capacity(jobs.len()));
    let fatal: Mutex<Option<RunnerError>> = Mutex::new(None);
    let workers = plan.parallelism.min(jobs.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(task_idx, preset, repeat)) = jobs.get(i) else { break };
                let task = &plan.corpus.tasks[task_idx];
                let config = plan.config_for(preset);
                match execute_run(task, preset, &config, repeat, agent, &plan.kit, &plan.settings) {
                    Ok(r) => {
                        log::debug!("{} {} r{}: success={}", r.task_id, r.method, r.repeat_index, r.success);
                        sink.lock().expect("sink lock").push(r);
                    }
                    Err(e) => {
                        stop.store(true, Ordering::SeqCst);
                        fatal.lock().expect("fatal lock").get_or_insert(e);
                    }
                }
            });
        }
    });

    if let Some(e) = fatal.into_inner().expect("fatal lock") {
        return Err(e);
    }
    let mut results = sink.into_inner().expect("sink lock");
    sort_results(&mut results);
    Ok(results)
}

pub fn results_to_jsonl(results: &[RunResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serializes"));
        out.push('\n');
    }
    out
}

pub fn write_results(path: impl AsRef<Path>, results: &[RunResult]) -> Result<(), RunnerError> {
    let path = path.as_ref();
    let io = |source| RunnerError::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(results_to_jsonl(results).as_bytes()).map_err(io)?;
    Ok(())
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<RunResult>, RunnerError> {
    let path = path.as_ref();
    let io = |source| RunnerError::Io { path: path.display().to_string(), source };
    let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| RunnerError::BadResult {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}
