//! Corpus projects, mutants, brute-force oracles and selection metrics.

mod corpus;
mod metrics;
mod mutate;
mod oracle;
mod pipeline;
mod sweep;

pub use corpus::{corpus_project, CorpusProject, CORPUS};
pub use metrics::{compute_metrics, Metrics};
pub use mutate::{generate_mutant, mutation_sites, MutatedRevision, MutationOp, MutationSite};
pub use oracle::{oracle_affected_entities, outcome_diff, trace_affected, TestMethod};
pub use pipeline::{class_filter, select_and_run, SelectedRun, Snapshot};
pub use sweep::{evaluate_mutant, summary_tsv, sweep, Baseline, MutantResult};
