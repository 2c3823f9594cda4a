use super::pipeline::Snapshot;
use crate::error::Result;
use crate::fingerprint::{compute_changes, ChangeSet};
use crate::frontend::model::declaring_class;
use crate::frontend::TestInventory;
use crate::runtime::{DependencyDb, EntityId, Outcome, TestReport};
use crate::tree::SourceTree;
use std::collections::{BTreeMap, BTreeSet};

/// `(test class, method key)`.
pub type TestMethod = (String, String);

fn kind(o: &Outcome) -> u8 {
    match o {
        Outcome::Pass => 0,
        Outcome::Fail(_) => 1,
        Outcome::Error(_) => 2,
    }
}

fn outcome_kinds(report: &TestReport) -> BTreeMap<TestMethod, Vec<(Option<usize>, u8)>> {
    let mut out: BTreeMap<TestMethod, Vec<(Option<usize>, u8)>> = BTreeMap::new();
    for o in &report.outcomes {
        out.entry((o.class.clone(), o.original_method()))
            .or_default()
            .push((o.row, kind(&o.outcome)));
    }
    out
}

/// Test methods whose pass/fail/error outcome differs between two runs.
pub fn outcome_diff(before: &TestReport, after: &TestReport) -> BTreeSet<TestMethod> {
    let a = outcome_kinds(before);
    let b = outcome_kinds(after);
    a.keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .cloned()
        .collect()
}

/// Signatures `delta` touches, given the signatures seen in `db`.
fn touches(delta: &ChangeSet, signature: &str) -> bool {
    delta.methods.contains_key(signature) || delta.classes.contains_key(declaring_class(signature))
}

/// Test methods whose collected trace calls anything in `delta`.
/// Class entities stand for every test the class runs.
pub fn trace_affected(db: &DependencyDb, inventory: &TestInventory, delta: &ChangeSet) -> BTreeSet<TestMethod> {
    let mut out = BTreeSet::new();
    for (entity, deps) in &db.entries {
        if !deps.iter().any(|d| touches(delta, d)) {
            continue;
        }
        match entity {
            EntityId::Class(c) => {
                if let Some(info) = inventory.class(c) {
                    out.extend(info.test_methods.iter().map(|m| (c.clone(), m.signature.key())));
                    out.extend(info.inherited_tests.iter().map(|m| (c.clone(), m.key())));
                }
            }
            EntityId::Method(c, k) | EntityId::Statement(c, k, _) => {
                out.insert((c.clone(), k.clone()));
            }
        }
    }
    out
}

/// Brute-force affected set for `v1 → v2`: outcome differences of two full
/// runs, plus methods whose method-level trace on `v1` reaches the change.
pub fn oracle_affected_entities(v1: &SourceTree, v2: &SourceTree) -> Result<BTreeSet<TestMethod>> {
    let old = Snapshot::analyze(v1.clone(), true)?;
    let new = Snapshot::analyze(v2.clone(), true)?;
    let (before, db) = old.collect()?;
    let after = new.retest_all()?;
    let delta = compute_changes(Some(&old.checksums), &new.checksums);
    let mut out = outcome_diff(&before, &after);
    out.extend(trace_affected(&db, &old.inventory, &delta));
    Ok(out)
}
