//! The analysis, collection and execution phases over in-memory source trees.

use super::metrics::{compute_metrics, Metrics};
use crate::error::Result;
use crate::fingerprint::{compute_changes, ChangeSet, ChecksumStore, Hierarchy};
use crate::frontend::{enumerate_tests, EffectSummary, ParsedProject, TestInventory};
use crate::instrument::instrument_file;
use crate::runtime::{collect_tree, execute_tree, DependencyDb, EntityId, TestReport};
use crate::select::{apply_rewrite, rewrite_tests, select_tests, SelectContext, SelectionResult};
use crate::slicer::{compute_levels, ClassLevels, SliceStore};
use crate::tree::SourceTree;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

/// One analyzed revision.
pub struct Snapshot {
    pub tree: SourceTree,
    pub project: ParsedProject,
    pub checksums: ChecksumStore,
    pub inventory: TestInventory,
    pub levels: BTreeMap<String, ClassLevels>,
    pub slices: SliceStore,
}

impl Snapshot {
    pub fn analyze(tree: SourceTree, method_level_only: bool) -> Result<Snapshot> {
        let project = ParsedProject::parse(&tree)?;
        project.link()?;
        let inventory = enumerate_tests(&project)?;
        let levels = compute_levels(&inventory, method_level_only);
        let slices = SliceStore::compute(&project, &levels, &EffectSummary::compute(&project));
        Ok(Snapshot {
            checksums: ChecksumStore::from_project(&project),
            tree,
            project,
            inventory,
            levels,
            slices,
        })
    }

    pub fn revision(&self) -> &str {
        &self.checksums.revision_id
    }

    pub fn instrumented(&self) -> SourceTree {
        let mut out = SourceTree::new();
        for file in &self.project.files {
            out.insert(file.path.clone(), instrument_file(file, &self.levels));
        }
        out
    }

    /// Run the instrumented suite.
    pub fn collect(&self) -> Result<(TestReport, DependencyDb)> {
        collect_tree(&self.instrumented())
    }

    pub fn retest_all(&self) -> Result<TestReport> {
        execute_tree(&self.tree, None)
    }
}

/// Selection and execution of one revision against an earlier one.
pub struct SelectedRun {
    pub delta: ChangeSet,
    pub selection: SelectionResult,
    pub rewritten: BTreeMap<String, String>,
    pub report: TestReport,
    pub metrics: Metrics,
}

/// Test classes to run for `selection`.
pub fn class_filter(selection: &SelectionResult) -> BTreeSet<EntityId> {
    selection.affected_classes().into_iter().map(EntityId::Class).collect()
}

/// Select against `db` (collected on `old`), rewrite, and run the selection on `new`.
pub fn select_and_run(old: &Snapshot, db: &DependencyDb, new: &Snapshot) -> Result<SelectedRun> {
    let started = Instant::now();
    let delta = compute_changes(Some(&old.checksums), &new.checksums);
    let hierarchy = Hierarchy::of_store(&old.checksums).superclass;
    let ctx = SelectContext {
        project: &new.project,
        inventory: &new.inventory,
        levels: &new.levels,
        old_hierarchy: &hierarchy,
    };
    let selection = select_tests(&new.slices, db, &delta, &ctx)?;
    let rewritten = rewrite_tests(&selection, &new.project, &new.slices)?;
    let analysis_millis = started.elapsed().as_millis();

    let started = Instant::now();
    let tree = apply_rewrite(&new.tree, &rewritten);
    let report = execute_tree(&tree, Some(class_filter(&selection)))?;
    let mut metrics = compute_metrics(&selection, &new.inventory);
    metrics.analysis_millis = analysis_millis;
    metrics.execution_millis = started.elapsed().as_millis();
    Ok(SelectedRun {
        delta,
        selection,
        rewritten,
        report,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus_project;

    #[test]
    fn unchanged_revision_selects_nothing() {
        let snap = Snapshot::analyze(corpus_project("complexmath").unwrap().tree(), false).unwrap();
        let (_, db) = snap.collect().unwrap();
        let run = select_and_run(&snap, &db, &snap).unwrap();
        assert!(run.delta.is_empty() && run.selection.is_empty());
        assert_eq!(run.report.tests_run(), 0);
        assert_eq!(run.metrics.selected_assertion_ratio(), 0.0);
    }
}
