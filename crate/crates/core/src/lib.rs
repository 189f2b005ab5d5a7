//! Evaluation harness for LLM-generated drone control code.
//!
//! Prompts are composed from four optional sections (guidelines, skill APIs,
//! constraints, worked examples), a model answers with a SkillScript
//! program, the program runs against a kinematic NED simulator and the
//! resulting transition log is scored against ground truth.

pub mod corpus;
pub mod dronesim;
pub mod eval;
pub mod llmclient;
pub mod prompt;
pub mod runner;
pub mod skillscript;

pub use corpus::{CorpusFile, Family, ManeuverSpec, Task};
pub use dronesim::{DroneState, SimConfig, Simulator, StateTransition};
pub use eval::{AggregateReport, CompletenessMode, ReportFormat, RunErrorCategory, RunResult, Score, Tolerance};
pub use llmclient::{Agent, ChatRequest, Fault, HttpConfig, ResponseCache};
pub use prompt::{MethodConfig, Preset, PromptBundle, SectionManifest};
pub use runner::{RunPlan, RunSettings};
pub use skillscript::{ErrorCategory, ExecError, SkillProgram};
