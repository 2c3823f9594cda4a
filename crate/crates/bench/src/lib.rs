//! Shared fixtures for the pipeline benchmarks.

use selertion::harness::{corpus_project, generate_mutant, Snapshot};
use selertion::runtime::DependencyDb;
use selertion::SourceTree;

pub fn corpus_tree(name: &str) -> SourceTree {
    corpus_project(name).unwrap_or_else(|| panic!("no corpus project `{name}`")).tree()
}

/// A collected base revision and a mutant of it.
pub struct Revisions {
    pub base: Snapshot,
    pub db: DependencyDb,
    pub next: Snapshot,
}

pub fn revisions(name: &str, seed: u64) -> Revisions {
    let base = Snapshot::analyze(corpus_tree(name), false).expect("corpus analyzes");
    let (_, db) = base.collect().expect("corpus collects");
    let mutant = generate_mutant(&base.tree, seed).expect("corpus has mutation sites");
    let next = Snapshot::analyze(mutant.tree, false).expect("mutant analyzes");
    Revisions { base, db, next }
}
