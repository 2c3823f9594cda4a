use crate::error::Result;
use crate::frontend::TestInventory;
use crate::select::SelectionResult;
use crate::tree::write_atomic;
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub selected_tests: usize,
    pub total_tests: usize,
    pub selected_assertions: usize,
    pub total_assertions: usize,
    pub analysis_millis: u128,
    pub execution_millis: u128,
}

fn ratio(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

impl Metrics {
    pub fn selected_test_ratio(&self) -> f64 {
        ratio(self.selected_tests, self.total_tests)
    }

    pub fn selected_assertion_ratio(&self) -> f64 {
        ratio(self.selected_assertions, self.total_assertions)
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "selectedTestRatio\tselectedAssertionRatio\tselectedTests\ttotalTests\tselectedAssertions\ttotalAssertions\tanalysisMillis\texecutionMillis\n\
             {:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            self.selected_test_ratio(),
            self.selected_assertion_ratio(),
            self.selected_tests,
            self.total_tests,
            self.selected_assertions,
            self.total_assertions,
            self.analysis_millis,
            self.execution_millis
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_tsv())
    }
}

/// Static selection counts over the declared tests of `inventory`.
///
/// A test counts as selected when it runs whole or when at least one of its
/// slices runs, so a full selection scores 1.0 even for tests without assertions.
pub fn compute_metrics(result: &SelectionResult, inventory: &TestInventory) -> Metrics {
    let mut tests = BTreeSet::new();
    let mut assertions = 0;
    for class in &inventory.classes {
        for m in &class.test_methods {
            let key = m.signature.key();
            if result.method_selected(&class.fq_name, &key) {
                tests.insert((class.fq_name.as_str(), key));
                assertions += m.assertion_count;
            }
        }
    }
    for s in &result.slices {
        if inventory.contains_test(&s.class, &s.method) {
            tests.insert((s.class.as_str(), s.method.clone()));
            assertions += 1;
        }
    }
    Metrics {
        selected_tests: tests.len(),
        total_tests: inventory.test_count(),
        selected_assertions: assertions,
        total_assertions: inventory.assertion_count(),
        ..Metrics::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{enumerate_tests, ParsedProject};
    use crate::select::SliceRef;
    use crate::tree::SourceTree;

    fn inventory() -> TestInventory {
        let tree = SourceTree::from_files([
            ("tests/A.mj", "class A { @Test void a() { assertTrue(true); assertTrue(true); } @Test void b() { assertTrue(true); } }"),
            ("tests/B.mj", "class B { @Test void c() { assertTrue(true); } }"),
        ]);
        enumerate_tests(&ParsedProject::parse(&tree).unwrap()).unwrap()
    }

    #[test]
    fn empty_selection_scores_zero() {
        let m = compute_metrics(&SelectionResult::default(), &inventory());
        assert_eq!((m.selected_test_ratio(), m.selected_assertion_ratio()), (0.0, 0.0));
    }

    #[test]
    fn whole_class_scores_its_share() {
        let mut r = SelectionResult::default();
        r.classes.insert("A".into());
        let m = compute_metrics(&r, &inventory());
        assert_eq!((m.selected_tests, m.total_tests), (2, 3));
        assert_eq!((m.selected_assertions, m.total_assertions), (3, 4));
    }

    #[test]
    fn one_slice_counts_one_assertion() {
        let mut r = SelectionResult::default();
        r.slices.insert(SliceRef {
            class: "A".into(),
            method: "a()".into(),
            assertion: 1,
            k: 2,
        });
        r.methods.insert(("B".into(), "c()".into()));
        let m = compute_metrics(&r, &inventory());
        assert_eq!((m.selected_tests, m.selected_assertions), (2, 2));
        assert!(m.to_tsv().contains("0.6667\t0.5000"));
    }
}
