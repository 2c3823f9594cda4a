//! The bundled example projects, one per downgrade path.

use crate::tree::SourceTree;

pub struct CorpusProject {
    pub name: &'static str,
    pub files: &'static [(&'static str, &'static str)],
}

impl CorpusProject {
    pub fn tree(&self) -> SourceTree {
        SourceTree::from_files(self.files.iter().copied())
    }
}

macro_rules! file {
    ($project:literal, $path:literal) => {
        ($path, include_str!(concat!("../../corpus/", $project, "/", $path)))
    };
}

pub const CORPUS: &[CorpusProject] = &[
    CorpusProject {
        name: "complexmath",
        files: &[
            file!("complexmath", "src/Complex.mj"),
            file!("complexmath", "tests/ComplexTest.mj"),
        ],
    },
    CorpusProject {
        name: "inherit",
        files: &[
            file!("inherit", "src/Shape.mj"),
            file!("inherit", "tests/RectTest.mj"),
            file!("inherit", "tests/ShapeTestBase.mj"),
            file!("inherit", "tests/SquareTest.mj"),
        ],
    },
    CorpusProject {
        name: "params",
        files: &[
            file!("params", "src/MathUtil.mj"),
            file!("params", "tests/GcdTest.mj"),
            file!("params", "tests/MathUtilTest.mj"),
        ],
    },
    CorpusProject {
        name: "expects",
        files: &[
            file!("expects", "src/Account.mj"),
            file!("expects", "tests/AccountTest.mj"),
        ],
    },
    CorpusProject {
        name: "loops",
        files: &[file!("loops", "src/Stats.mj"), file!("loops", "tests/StatsTest.mj")],
    },
    CorpusProject {
        name: "chain",
        files: &[
            file!("chain", "src/Counter.mj"),
            file!("chain", "tests/CounterTest.mj"),
            file!("chain", "tests/ResetTest.mj"),
        ],
    },
];

pub fn corpus_project(name: &str) -> Option<&'static CorpusProject> {
    CORPUS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{enumerate_tests, EffectSummary, ParsedProject};
    use crate::runtime::execute_tree;
    use crate::slicer::{compute_levels, SliceStore};

    #[test]
    fn every_project_passes_its_own_suite() {
        for p in CORPUS {
            let r = execute_tree(&p.tree(), None).unwrap();
            assert!(r.all_passed(), "{}: {:?}", p.name, r.outcomes);
            assert!(r.tests_run() > 0);
        }
    }

    #[test]
    fn levels_overview() {
        for p in CORPUS {
            let parsed = ParsedProject::parse(&p.tree()).unwrap();
            let levels = compute_levels(&enumerate_tests(&parsed).unwrap(), false);
            let store = SliceStore::compute(&parsed, &levels, &EffectSummary::compute(&parsed));
            for (c, l) in &levels {
                eprintln!("{} {c} {} {:?}", p.name, l.class, l.methods.iter().map(|(k, m)| format!("{k}={m}")).collect::<Vec<_>>());
            }
            for (c, s) in store.all_slices() {
                eprintln!("  {c} {} {:?}", s.method.key(), s.statements);
            }
        }
    }
}
