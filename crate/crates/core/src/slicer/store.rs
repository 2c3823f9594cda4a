use super::{build_pdg, slice_assertions, AssertionSlice, ClassLevels, Level, LevelReason, SelectionLevel};
use crate::error::{Error, IoContext, Result};
use crate::fingerprint::store::read_rows;
use crate::frontend::model::MethodSig;
use crate::frontend::{EffectSummary, ParsedProject};
use crate::tree::write_atomic;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

/// Per-class levels and slices of every assertion-level method.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SliceStore {
    pub levels: BTreeMap<String, ClassLevels>,
    /// class → method key → slices ordered by assertion ordinal
    pub slices: BTreeMap<String, BTreeMap<String, Vec<AssertionSlice>>>,
    /// Digest of the effect summary the slices were computed under.
    pub effects_digest: String,
}

impl SliceStore {
    pub fn compute(
        project: &ParsedProject,
        levels: &BTreeMap<String, ClassLevels>,
        effects: &EffectSummary,
    ) -> SliceStore {
        let mut store = SliceStore {
            levels: levels.clone(),
            slices: BTreeMap::new(),
            effects_digest: effects.digest(),
        };
        for class in levels.keys() {
            store.slice_class(project, class, effects);
        }
        store
    }

    fn slice_class(&mut self, project: &ParsedProject, class: &str, effects: &EffectSummary) {
        let mut per_method = BTreeMap::new();
        if let (Some(levels), Some(model)) = (self.levels.get(class), project.class(class)) {
            for (key, level) in &levels.methods {
                if level.level != Level::Assertion {
                    continue;
                }
                if let Some(m) = model.method(key) {
                    per_method.insert(key.clone(), slice_assertions(m, &build_pdg(m, effects)));
                }
            }
        }
        if per_method.is_empty() {
            self.slices.remove(class);
        } else {
            self.slices.insert(class.to_string(), per_method);
        }
    }

    /// Bring the store up to date: re-slice `dirty` classes, classes whose
    /// levels moved, and everything when the effect summary changed.
    /// Returns the classes that were re-sliced.
    pub fn update(
        &mut self,
        project: &ParsedProject,
        levels: &BTreeMap<String, ClassLevels>,
        effects: &EffectSummary,
        dirty: &BTreeSet<String>,
    ) -> BTreeSet<String> {
        let digest = effects.digest();
        let everything = digest != self.effects_digest;
        let mut redo = BTreeSet::new();
        for (class, l) in levels {
            if everything || dirty.contains(class) || self.levels.get(class) != Some(l) {
                redo.insert(class.clone());
            }
        }
        self.slices.retain(|c, _| levels.contains_key(c));
        self.levels = levels.clone();
        self.effects_digest = digest;
        for class in &redo {
            self.slice_class(project, class, effects);
        }
        redo
    }

    pub fn method_slices(&self, class: &str, key: &str) -> Option<&[AssertionSlice]> {
        self.slices.get(class)?.get(key).map(Vec::as_slice)
    }

    pub fn all_slices(&self) -> impl Iterator<Item = (&str, &AssertionSlice)> {
        self.slices
            .iter()
            .flat_map(|(c, ms)| ms.values().flatten().map(move |s| (c.as_str(), s)))
    }

    pub fn slice_count(&self) -> usize {
        self.all_slices().count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        if dir.exists() {
            for entry in fs::read_dir(dir).at(dir)? {
                let path = entry.at(dir)?.path();
                if path.extension().is_some_and(|e| e == "slices") {
                    fs::remove_file(&path).at(&path)?;
                }
            }
        }
        for (class, methods) in &self.slices {
            let mut text = String::new();
            for slice in methods.values().flatten() {
                let ordinals: Vec<String> = slice.statements.iter().map(usize::to_string).collect();
                text.push_str(&format!("{}\t{}\t{}\n", slice.method, slice.assertion, ordinals.join(",")));
            }
            write_atomic(&dir.join(format!("{class}.slices")), &text)?;
        }
        let mut levels = String::new();
        for (class, l) in &self.levels {
            levels.push_str(&level_row(class, "*", l.class));
            for (key, m) in &l.methods {
                levels.push_str(&level_row(class, key, *m));
            }
        }
        write_atomic(&dir.join("levels.tsv"), &levels)?;
        write_atomic(&dir.join("meta.tsv"), &format!("effects\t{}\n", self.effects_digest))
    }

    pub fn read(dir: &Path) -> Result<SliceStore> {
        let mut store = SliceStore::default();
        for r in read_rows(&dir.join("meta.tsv"), 2)? {
            if r[0] == "effects" {
                store.effects_digest = r[1].clone();
            }
        }
        let levels_path = dir.join("levels.tsv");
        for r in read_rows(&levels_path, 4)? {
            let level = parse_level(&r[2], &r[3]).ok_or_else(|| Error::Store {
                path: levels_path.clone(),
                message: format!("bad level {} {}", r[2], r[3]),
            })?;
            if r[1] == "*" {
                store.levels.insert(
                    r[0].clone(),
                    ClassLevels {
                        class: level,
                        methods: BTreeMap::new(),
                    },
                );
            } else if let Some(l) = store.levels.get_mut(&r[0]) {
                l.methods.insert(r[1].clone(), level);
            }
        }
        let mut entries: Vec<_> = fs::read_dir(dir)
            .at(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "slices"))
            .collect();
        entries.sort();
        for path in entries {
            let class = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let mut methods: BTreeMap<String, Vec<AssertionSlice>> = BTreeMap::new();
            for r in read_rows(&path, 3)? {
                let bad = |m: &str| Error::Store {
                    path: path.clone(),
                    message: m.to_string(),
                };
                let method = MethodSig::parse(&r[0]).ok_or_else(|| bad("bad signature"))?;
                let assertion = r[1].parse().map_err(|_| bad("bad assertion ordinal"))?;
                let statements = r[2]
                    .split(',')
                    .map(|s| s.parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad("bad statement list"))?;
                methods.entry(method.key()).or_default().push(AssertionSlice {
                    method,
                    assertion,
                    statements,
                    criterion_vars: BTreeSet::new(),
                });
            }
            store.slices.insert(class, methods);
        }
        Ok(store)
    }
}

fn level_row(class: &str, key: &str, l: SelectionLevel) -> String {
    format!("{class}\t{key}\t{}\t{}\n", l.level.letter(), l.reason.as_str())
}

fn parse_level(letter: &str, reason: &str) -> Option<SelectionLevel> {
    let level = match letter {
        "A" => Level::Assertion,
        "M" => Level::Method,
        "C" => Level::Class,
        _ => return None,
    };
    Some(SelectionLevel::new(level, LevelReason::parse(reason)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::enumerate_tests;
    use crate::slicer::compute_levels;
    use crate::tree::SourceTree;

    fn project(files: &[(&str, &str)]) -> ParsedProject {
        ParsedProject::parse(&SourceTree::from_files(files.iter().copied())).unwrap()
    }

    #[test]
    fn roundtrip_through_disk() {
        let p = project(&[(
            "tests/T.mj",
            "class T { @Test void a() { int x = 1; assertEq(x, 1); assertTrue(true); } @Test void b() { sys.sleep(1); } }",
        )]);
        let levels = compute_levels(&enumerate_tests(&p).unwrap(), false);
        let s = SliceStore::compute(&p, &levels, &EffectSummary::compute(&p));
        let d = tempfile::tempdir().unwrap();
        s.write(d.path()).unwrap();
        let back = SliceStore::read(d.path()).unwrap();
        assert_eq!(back.levels, s.levels);
        assert_eq!(back.effects_digest, s.effects_digest);
        let stmts = |st: &SliceStore| -> Vec<Vec<usize>> {
            st.all_slices().map(|(_, sl)| sl.statements.clone()).collect()
        };
        assert_eq!(stmts(&back), vec![vec![0, 1], vec![2]]);
        assert_eq!(stmts(&back), stmts(&s));
    }

    #[test]
    fn update_touches_only_dirty_classes() {
        let files = [
            ("tests/A.mj", "class A { @Test void a() { assertTrue(true); } }"),
            ("tests/B.mj", "class B { @Test void b() { assertTrue(true); } }"),
        ];
        let p = project(&files);
        let e = EffectSummary::compute(&p);
        let levels = compute_levels(&enumerate_tests(&p).unwrap(), false);
        let mut s = SliceStore::compute(&p, &levels, &e);
        let redone = s.update(&p, &levels, &e, &BTreeSet::from(["B".to_string()]));
        assert_eq!(redone, BTreeSet::from(["B".to_string()]));
    }
}
