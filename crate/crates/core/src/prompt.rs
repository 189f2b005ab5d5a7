//! Prompt composition from the four sections: guidelines, skill APIs,
//! constraints and examples.
//!
//! The guidelines and skill API documentation are always present. Each
//! method preset toggles the constraints and examples sections; the example
//! blocks come from an [`ExampleEntry`] library whose entries carry three
//! solution variants (with reasoning comments, without them, and without the
//! code that demonstrates the constraints).

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dronesim::StateTransition;
use crate::skillscript::{self, ExecError};

/// Number of examples used by the example-bearing presets.
pub const DEFAULT_K: usize = 3;

pub const SECTION_GUIDELINES: &str = "## Guidelines";
pub const SECTION_SKILL_APIS: &str = "## Skill APIs";
pub const SECTION_CONSTRAINTS: &str = "## Constraints";
pub const SECTION_EXAMPLES: &str = "## Examples";
pub const EXAMPLE_HEADER: &str = "### Example ";

const DEFAULT_GUIDELINES: &str = include_str!("../assets/guidelines.md");
const DEFAULT_SKILL_APIS: &str = include_str!("../assets/skill_apis.md");
const DEFAULT_CONSTRAINTS: &str = include_str!("../assets/constraints.md");
const DEFAULT_EXAMPLES: &str = include_str!("../assets/examples.json");

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("example library is not valid: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("example `{id}`: {variant} does not parse: {error}")]
    InvalidSolution { id: String, variant: &'static str, error: ExecError },
    #[error("example `{id}`: solution_cot and solution_plain differ beyond comments")]
    VariantMismatch { id: String },
    #[error("duplicate example id `{0}`")]
    DuplicateId(String),
    #[error("k = {k} exceeds the example library size {len}")]
    KExceedsLibrary { k: usize, len: usize },
    #[error("k = {0} requires the examples section")]
    ExamplesDisabled(usize),
    #[error("constraints not covered by the first {k} examples: {}", missing.join(", "))]
    UncoveredConstraints { k: usize, missing: Vec<String> },
    #[error("unknown method `{0}` (expected base, constraints, examples or gsce)")]
    UnknownPreset(String),
}

/// The four compared methods. Guidelines and skill APIs are always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Base,
    Constraints,
    Examples,
    Gsce,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Base, Preset::Constraints, Preset::Examples, Preset::Gsce];

    pub fn includes_constraints(self) -> bool {
        matches!(self, Preset::Constraints | Preset::Gsce)
    }

    pub fn includes_examples(self) -> bool {
        matches!(self, Preset::Examples | Preset::Gsce)
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Base => "base",
            Preset::Constraints => "constraints",
            Preset::Examples => "examples",
            Preset::Gsce => "gsce",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| PromptError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodConfig {
    pub include_constraints: bool,
    pub include_examples: bool,
    pub k: usize,
    /// Example solutions carry step-by-step reasoning comments.
    pub cot: bool,
    /// Example solutions demonstrate the constraints in code.
    pub constraint_impl: bool,
}

impl MethodConfig {
    /// The preset's configuration with `k = 3`, CoT and constraint
    /// implementation on whenever examples are included.
    pub fn preset(preset: Preset) -> Self {
        let ex = preset.includes_examples();
        MethodConfig {
            include_constraints: preset.includes_constraints(),
            include_examples: ex,
            k: if ex { DEFAULT_K } else { 0 },
            cot: ex,
            constraint_impl: ex,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.k > 0 && !self.include_examples {
            return Err(PromptError::ExamplesDisabled(self.k));
        }
        Ok(())
    }
}

/// One few-shot demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleEntry {
    pub id: String,
    pub query: String,
    pub solution_cot: String,
    pub solution_plain: String,
    pub solution_no_constraint: String,
    #[serde(default)]
    pub constraints_covered: Vec<String>,
    /// Expected transitions of a correct solution, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<StateTransition>>,
}

impl ExampleEntry {
    fn check(&self) -> Result<(), PromptError> {
        let parse = |variant: &'static str, src: &str| {
            skillscript::parse(src).map_err(|error| PromptError::InvalidSolution {
                id: self.id.clone(),
                variant,
                error,
            })
        };
        let cot = parse("solution_cot", &self.solution_cot)?;
        let plain = parse("solution_plain", &self.solution_plain)?;
        parse("solution_no_constraint", &self.solution_no_constraint)?;
        if cot != plain {
            return Err(PromptError::VariantMismatch { id: self.id.clone() });
        }
        Ok(())
    }

    /// The solution text shown for the given flags.
    pub fn solution(&self, cot: bool, constraint_impl: bool) -> String {
        match (constraint_impl, cot) {
            (true, true) => self.solution_cot.clone(),
            (true, false) => self.solution_plain.clone(),
            (false, true) => self.solution_no_constraint.clone(),
            (false, false) => skillscript::strip_comments(&self.solution_no_constraint),
        }
    }
}

#[derive(Deserialize)]
struct LibraryFile {
    #[serde(default)]
    examples: Vec<ExampleEntry>,
}

/// Parse an example library document. Whitespace-only input is an empty
/// library.
pub fn parse_example_library(text: &str) -> Result<Vec<ExampleEntry>, PromptError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let file: LibraryFile = serde_json::from_str(text)?;
    let mut seen = HashSet::new();
    for e in &file.examples {
        if !seen.insert(e.id.as_str()) {
            return Err(PromptError::DuplicateId(e.id.clone()));
        }
        e.check()?;
    }
    Ok(file.examples)
}

pub fn load_example_library(path: impl AsRef<Path>) -> Result<Vec<ExampleEntry>, PromptError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| PromptError::Io { path: path.display().to_string(), source })?;
    parse_example_library(&text)
}

/// The bundled eight-entry library.
pub fn default_library() -> Vec<ExampleEntry> {
    parse_example_library(DEFAULT_EXAMPLES).expect("bundled example library is valid")
}

/// Check that the first `k` entries jointly demonstrate every constraint.
pub fn validate_library(library: &[ExampleEntry], constraint_ids: &[String], k: usize) -> Result<(), PromptError> {
    let covered: HashSet<&str> =
        library.iter().take(k).flat_map(|e| e.constraints_covered.iter().map(String::as_str)).collect();
    let missing: BTreeSet<String> =
        constraint_ids.iter().filter(|id| !covered.contains(id.as_str())).cloned().collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(PromptError::UncoveredConstraints { k, missing: missing.into_iter().collect() })
    }
}

/// Section texts. Constraint identifiers are the `[id]` tags that open
/// paragraphs of the constraints text.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptAssets {
    pub guidelines: String,
    pub skill_apis: String,
    pub constraints: String,
}

impl Default for PromptAssets {
    fn default() -> Self {
        PromptAssets {
            guidelines: DEFAULT_GUIDELINES.to_string(),
            skill_apis: DEFAULT_SKILL_APIS.to_string(),
            constraints: DEFAULT_CONSTRAINTS.to_string(),
        }
    }
}

impl PromptAssets {
    pub fn constraint_ids(&self) -> Vec<String> {
        self.constraints
            .lines()
            .filter_map(|l| {
                let rest = l.trim_start().strip_prefix('[')?;
                let end = rest.find(']')?;
                Some(rest[..end].to_string())
            })
            .collect()
    }

    /// Replace any section whose override path is given.
    pub fn with_overrides(
        mut self,
        guidelines: Option<&Path>,
        skill_apis: Option<&Path>,
        constraints: Option<&Path>,
    ) -> Result<Self, PromptError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| PromptError::Io { path: p.display().to_string(), source })
        };
        if let Some(p) = guidelines {
            self.guidelines = read(p)?;
        }
        if let Some(p) = skill_apis {
            self.skill_apis = read(p)?;
        }
        if let Some(p) = constraints {
            self.constraints = read(p)?;
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionManifest {
    pub guidelines: bool,
    pub skill_apis: bool,
    pub constraints: bool,
    /// Number of example blocks; the examples section is present iff > 0.
    pub examples: usize,
    pub cot: bool,
    pub constraint_impl: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub manifest: SectionManifest,
}

/// Assemble the system prompt for `config`. Pure: identical inputs give
/// byte-identical bundles.
pub fn compose(
    config: &MethodConfig,
    library: &[ExampleEntry],
    assets: &PromptAssets,
    query: &str,
) -> Result<PromptBundle, PromptError> {
    config.validate()?;
    let k = if config.include_examples { config.k } else { 0 };
    if k > library.len() {
        return Err(PromptError::KExceedsLibrary { k, len: library.len() });
    }

    let mut sections = vec![
        format!("{SECTION_GUIDELINES}\n\n{}", assets.guidelines.trim_end()),
        format!("{SECTION_SKILL_APIS}\n\n{}", assets.skill_apis.trim_end()),
    ];
    if config.include_constraints {
        sections.push(format!("{SECTION_CONSTRAINTS}\n\n{}", assets.constraints.trim_end()));
    }
    if k > 0 {
        let mut s = String::from(SECTION_EXAMPLES);
        for (i, e) in library.iter().take(k).enumerate() {
            let code = e.solution(config.cot, config.constraint_impl);
            s.push_str(&format!(
                "\n\n{EXAMPLE_HEADER}{}\nTask: {}\n```skillscript\n{}\n```",
                i + 1,
                e.query.trim(),
                code.trim_end()
            ));
        }
        sections.push(s);
    }
    let mut system_text = sections.join("\n\n");
    system_text.push('\n');

    Ok(PromptBundle {
        system_text,
        user_text: query.to_string(),
        manifest: SectionManifest {
            guidelines: true,
            skill_apis: true,
            constraints: config.include_constraints,
            examples: k,
            cot: k > 0 && config.cot,
            constraint_impl: k > 0 && config.constraint_impl,
        },
    })
}

/// Code of each example block in a composed system prompt, in order.
pub fn example_code_blocks(system_text: &str) -> Vec<String> {
    let Some(start) = system_text.find(SECTION_EXAMPLES) else {
        return Vec::new();
    };
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in system_text[start..].lines() {
        match (&mut current, line.trim_start().starts_with("```")) {
            (None, true) => current = Some(Vec::new()),
            (Some(lines), true) => {
                blocks.push(lines.join("\n"));
                current = None;
            }
            (Some(lines), false) => lines.push(line),
            (None, false) => {}
        }
    }
    blocks
}
