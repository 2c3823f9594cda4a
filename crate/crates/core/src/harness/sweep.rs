use super::corpus::CorpusProject;
use super::metrics::Metrics;
use super::mutate::{generate_mutant, MutationSite};
use super::oracle::{outcome_diff, trace_affected, TestMethod};
use super::pipeline::{select_and_run, Snapshot};
use crate::error::{Error, Result};
use crate::runtime::{DependencyDb, TestReport};
use crate::tree::SourceTree;
use std::collections::BTreeSet;

/// A collected base revision, analyzed both at full granularity and with
/// assertion-level selection switched off.
pub struct Baseline {
    pub name: String,
    pub fine: Snapshot,
    pub fine_db: DependencyDb,
    pub coarse: Snapshot,
    pub coarse_db: DependencyDb,
    pub retest: TestReport,
}

impl Baseline {
    pub fn new(name: &str, tree: SourceTree) -> Result<Baseline> {
        let fine = Snapshot::analyze(tree.clone(), false)?;
        let coarse = Snapshot::analyze(tree, true)?;
        let (_, fine_db) = fine.collect()?;
        let (_, coarse_db) = coarse.collect()?;
        let retest = fine.retest_all()?;
        Ok(Baseline {
            name: name.to_string(),
            fine,
            fine_db,
            coarse,
            coarse_db,
            retest,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MutantResult {
    pub project: String,
    pub seed: u64,
    pub site: MutationSite,
    /// Outcome-changing test methods.
    pub changed: BTreeSet<TestMethod>,
    /// Methods reached by the change per the method-level trace.
    pub traced: BTreeSet<TestMethod>,
    /// Oracle methods the selection did not cover, or whose selected slices
    /// disagreed with the full run.
    pub missed: BTreeSet<TestMethod>,
    pub fine: Metrics,
    pub coarse: Metrics,
}

fn passes(report: &TestReport, class: &str, key: &str) -> Option<bool> {
    let mut seen = false;
    let mut ok = true;
    for o in report.outcomes.iter().filter(|o| o.class == class && o.original_method() == key) {
        seen = true;
        ok &= o.outcome.is_pass();
    }
    seen.then_some(ok)
}

pub fn evaluate_mutant(base: &Baseline, seed: u64) -> Result<MutantResult> {
    let mutant = generate_mutant(&base.fine.tree, seed)?;
    let fine = Snapshot::analyze(mutant.tree.clone(), false)?;
    let coarse = Snapshot::analyze(mutant.tree, true)?;
    let after = fine.retest_all()?;
    let fine_run = select_and_run(&base.fine, &base.fine_db, &fine)?;
    let coarse_run = select_and_run(&base.coarse, &base.coarse_db, &coarse)?;

    let changed = outcome_diff(&base.retest, &after);
    let traced = trace_affected(&base.coarse_db, &base.coarse.inventory, &coarse_run.delta);
    let sel = &fine_run.selection;
    let mut missed = BTreeSet::new();
    for (c, k) in changed.iter().chain(&traced) {
        if !sel.covers_method(c, k) {
            missed.insert((c.clone(), k.clone()));
        }
    }
    for (c, k) in &changed {
        if sel.covers_method(c, k) && passes(&fine_run.report, c, k) != passes(&after, c, k) {
            missed.insert((c.clone(), k.clone()));
        }
    }
    Ok(MutantResult {
        project: base.name.clone(),
        seed,
        site: mutant.site,
        changed,
        traced,
        missed,
        fine: fine_run.metrics,
        coarse: coarse_run.metrics,
    })
}

/// Evaluate seeds `0..seeds` on every project, one worker per project.
pub fn sweep(projects: &[CorpusProject], seeds: u64) -> Result<Vec<MutantResult>> {
    let per_project: Vec<Result<Vec<MutantResult>>> = std::thread::scope(|s| {
        let handles: Vec<_> = projects
            .iter()
            .map(|p| {
                s.spawn(move || {
                    let base = Baseline::new(p.name, p.tree())?;
                    (0..seeds).map(|seed| evaluate_mutant(&base, seed)).collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Other("sweep worker panicked".into()))))
            .collect()
    });
    let mut out = Vec::new();
    for r in per_project {
        out.extend(r?);
    }
    Ok(out)
}

/// One TSV row per mutant, with a header.
pub fn summary_tsv(results: &[MutantResult]) -> String {
    let mut out = String::from("project\tseed\top\tlocation\tchanged\tmissed\tassertionRatio\tmethodLevelRatio\n");
    for r in results {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\n",
            r.project,
            r.seed,
            r.site.op,
            r.site.location,
            r.changed.len(),
            r.missed.len(),
            r.fine.selected_assertion_ratio(),
            r.coarse.selected_assertion_ratio()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus_project;

    #[test]
    fn a_few_complexmath_mutants_are_covered() {
        let p = corpus_project("complexmath").unwrap();
        let base = Baseline::new(p.name, p.tree()).unwrap();
        for seed in 0..4 {
            let r = evaluate_mutant(&base, seed).unwrap();
            assert!(r.missed.is_empty(), "{r:?}");
            assert!(r.fine.selected_assertion_ratio() <= r.coarse.selected_assertion_ratio());
        }
    }
}
