//! Store-backed commands: initial run, per-revision analyze/select/execute,
//! offline collection, full reruns and stored reports.

mod store;

pub use store::{Store, StoreLock, StoreState, LAYOUT_VERSION, STORE_DIR, STORE_ENV};

use crate::error::{Error, IoContext, Result};
use crate::fingerprint::{compute_changes, ChangeSet, ChecksumStore, Hierarchy};
use crate::frontend::model::is_test_path;
use crate::frontend::EffectSummary;
use crate::harness::{class_filter, compute_metrics, Metrics, Snapshot};
use crate::instrument::{sync_instrumented_copy, InstrumentedCopy};
use crate::runtime::{collect_dependencies, execute_tests, DependencyDb, TestReport};
use crate::select::{begin_rewrite, restore_tests, rewrite_tests, select_tests, SelectContext, SelectionResult};
use crate::slicer::SliceStore;
use crate::tree::SourceTree;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyzeOptions {
    /// Refresh the dependency database after the run.
    pub collect: bool,
    /// Treat every assertion-level test method as method level.
    pub method_level: bool,
}

#[derive(Debug)]
pub struct InitSummary {
    pub revision: String,
    pub classes: usize,
    pub methods: usize,
    pub slices: usize,
    pub dependencies: usize,
    pub selection: SelectionResult,
    pub report: TestReport,
    pub metrics: Metrics,
}

#[derive(Debug)]
pub struct RunSummary {
    pub revision: String,
    pub delta: ChangeSet,
    pub selection: SelectionResult,
    /// Test classes whose slices were recomputed.
    pub resliced: BTreeSet<String>,
    /// Files re-instrumented in the instrumented copy.
    pub synced: Vec<String>,
    pub collected: bool,
    pub report: TestReport,
    pub metrics: Metrics,
}

fn write_outputs(store: &Store, revision: &str, selection: &SelectionResult, report: &TestReport, metrics: &Metrics) -> Result<()> {
    report.write(&store.report(revision))?;
    selection.write_manifest(&store.selection(revision))?;
    metrics.write(&store.metrics(revision))
}

/// Analyze, instrument and collect the whole project, then run its suite once.
pub fn cmd_init(project_dir: &Path, store: &Store, force: bool, method_level: bool) -> Result<InitSummary> {
    if store.is_initialized() {
        if !force {
            return Err(Error::AlreadyInitialized(store.root.clone()));
        }
        if store.root.join("lock").exists() {
            return Err(Error::Locked(store.root.join("lock")));
        }
        fs::remove_dir_all(&store.root).at(&store.root)?;
    }
    let _lock = store.lock()?;
    let started = Instant::now();
    let snap = Snapshot::analyze(SourceTree::load(project_dir)?, method_level)?;
    let revision = snap.revision().to_string();
    snap.checksums.write(&store.checksums())?;
    snap.checksums.write(&store.collected())?;
    snap.slices.write(&store.slices())?;
    InstrumentedCopy::build(&store.instrumented(), &snap.project, &snap.levels)?;
    let db = collect_dependencies(&store.instrumented(), Some(&store.deps()))?;

    let mut selection = SelectionResult::default();
    for class in &snap.inventory.classes {
        selection.select_class(&class.fq_name, "initial");
    }
    let analysis_millis = started.elapsed().as_millis();
    let started = Instant::now();
    let report = execute_tests(project_dir, None)?;
    let mut metrics = compute_metrics(&selection, &snap.inventory);
    metrics.analysis_millis = analysis_millis;
    metrics.execution_millis = started.elapsed().as_millis();
    write_outputs(store, &revision, &selection, &report, &metrics)?;
    StoreState {
        layout_version: LAYOUT_VERSION.into(),
        last_revision: revision.clone(),
        collection_current: true,
    }
    .write(store)?;
    Ok(InitSummary {
        revision,
        classes: snap.checksums.classes.len(),
        methods: snap.checksums.methods.values().map(|m| m.len()).sum(),
        slices: snap.slices.slice_count(),
        dependencies: db.entries.len(),
        selection,
        report,
        metrics,
    })
}

/// Select and run the tests affected since the last analyzed revision.
pub fn cmd_analyze_and_run(project_dir: &Path, store: &Store, opts: AnalyzeOptions) -> Result<RunSummary> {
    let state = StoreState::read(store)?;
    let _lock = store.lock()?;
    restore_tests(project_dir, &store.backup())?;

    let started = Instant::now();
    let snap = Snapshot::analyze(SourceTree::load(project_dir)?, opts.method_level)?;
    let revision = snap.revision().to_string();
    let old = ChecksumStore::read(&store.checksums())?;
    let delta = compute_changes(Some(&old), &snap.checksums);

    let mut slices = SliceStore::read(&store.slices())?;
    let dirty: BTreeSet<String> = delta
        .test_classes()
        .map(|c| c.class.clone())
        .chain(delta.test_methods().map(|m| m.class.clone()))
        .collect();
    let resliced = slices.update(&snap.project, &snap.levels, &EffectSummary::compute(&snap.project), &dirty);

    let db = DependencyDb::read(&store.deps())?;
    let hierarchy = Hierarchy::of_store(&old).superclass;
    let ctx = SelectContext {
        project: &snap.project,
        inventory: &snap.inventory,
        levels: &snap.levels,
        old_hierarchy: &hierarchy,
    };
    let mut selection = select_tests(&slices, &db, &delta, &ctx)?;
    if !state.collection_current {
        // the database predates some test edits: run those classes whole
        let collected = ChecksumStore::read(&store.collected())?;
        let pending = compute_changes(Some(&collected), &snap.checksums);
        for path in pending.files.iter().filter(|p| is_test_path(p)) {
            let classes: Vec<String> = snap.checksums.classes_in(path).map(str::to_string).collect();
            for class in classes.iter().filter(|c| snap.levels.contains_key(*c)) {
                selection.select_class(class, &format!("stale:{path}"));
            }
        }
    }
    let rewritten = rewrite_tests(&selection, &snap.project, &slices)?;
    let analysis_millis = started.elapsed().as_millis();

    let started = Instant::now();
    let report = if selection.is_empty() {
        TestReport::default()
    } else {
        begin_rewrite(project_dir, &store.backup(), &store.rewritten(&revision), &rewritten)?;
        let ran = execute_tests(project_dir, Some(class_filter(&selection)));
        restore_tests(project_dir, &store.backup())?;
        ran?
    };
    let mut metrics = compute_metrics(&selection, &snap.inventory);
    metrics.analysis_millis = analysis_millis;
    metrics.execution_millis = started.elapsed().as_millis();
    write_outputs(store, &revision, &selection, &report, &metrics)?;

    snap.checksums.write(&store.checksums())?;
    slices.write(&store.slices())?;
    let mut copy = InstrumentedCopy::open(&store.instrumented())?;
    let synced = sync_instrumented_copy(&mut copy, &delta, &snap.project, &snap.levels)?;
    let collection_current = if opts.collect {
        collect_dependencies(&store.instrumented(), Some(&store.deps()))?;
        snap.checksums.write(&store.collected())?;
        true
    } else {
        state.collection_current && delta.is_empty() && synced.is_empty()
    };
    StoreState {
        layout_version: LAYOUT_VERSION.into(),
        last_revision: revision.clone(),
        collection_current,
    }
    .write(store)?;
    Ok(RunSummary {
        revision,
        delta,
        selection,
        resliced,
        synced,
        collected: opts.collect,
        report,
        metrics,
    })
}

/// Refresh the dependency database from the instrumented copy.
pub fn cmd_collect(store: &Store) -> Result<DependencyDb> {
    let state = StoreState::read(store)?;
    let _lock = store.lock()?;
    let db = collect_dependencies(&store.instrumented(), Some(&store.deps()))?;
    fs::create_dir_all(store.collected()).at(store.collected())?;
    ChecksumStore::read(&store.checksums())?.write(&store.collected())?;
    StoreState {
        collection_current: true,
        ..state
    }
    .write(store)?;
    Ok(db)
}

/// Run the whole suite on the original sources.
pub fn cmd_retestall(project_dir: &Path) -> Result<TestReport> {
    execute_tests(project_dir, None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredReport {
    pub revision: String,
    pub report: String,
    pub selection: String,
    pub metrics: String,
}

/// Stored outputs of the revision starting with `prefix`.
pub fn cmd_report(store: &Store, prefix: &str) -> Result<StoredReport> {
    let dir = store.root.join("reports");
    if !dir.exists() {
        return Err(Error::NotInitialized(store.root.clone()));
    }
    let mut hits = Vec::new();
    for entry in fs::read_dir(&dir).at(&dir)? {
        let name = entry.at(&dir)?.file_name().to_string_lossy().into_owned();
        if let Some(rev) = name.strip_suffix(".report.tsv") {
            if rev.starts_with(prefix) {
                hits.push(rev.to_string());
            }
        }
    }
    let revision = match hits.as_slice() {
        [one] => one.clone(),
        [] => return Err(Error::Other(format!("no report for revision `{prefix}`"))),
        _ => return Err(Error::Other(format!("revision prefix `{prefix}` is ambiguous"))),
    };
    let read = |p: std::path::PathBuf| -> Result<String> {
        if p.exists() {
            fs::read_to_string(&p).at(&p)
        } else {
            Ok(String::new())
        }
    };
    Ok(StoredReport {
        report: read(store.report(&revision))?,
        selection: read(store.selection(&revision))?,
        metrics: read(store.metrics(&revision))?,
        revision,
    })
}
