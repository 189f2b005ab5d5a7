//! Shared inputs for the benchmarks.

use gsce_core::corpus::{self, CorpusFile};
use gsce_core::dronesim::StateTransition;

/// The bundled corpus plus every task's oracle program.
pub fn corpus_with_programs() -> (CorpusFile, Vec<String>) {
    let corpus = corpus::default_corpus();
    let programs =
        corpus.tasks.iter().map(|t| corpus::oracle_program(t.maneuvers.as_deref().unwrap_or_default())).collect();
    (corpus, programs)
}

/// A transition log of `n` entries alternating turns and moves.
pub fn synthetic_log(n: usize) -> Vec<StateTransition> {
    (0..n)
        .map(|i| {
            if i % 3 == 0 {
                StateTransition::rotation(((i * 37) % 360) as f64 - 179.0)
            } else {
                StateTransition::movement((i % 7) as f64, -((i % 5) as f64), (i % 3) as f64 * 0.5)
            }
        })
        .collect()
}
