use super::SelectionResult;
use crate::error::{Error, IoContext, Result};
use crate::frontend::ast::{ClassDecl, Member, MethodDecl};
use crate::frontend::model::{ClassModel, MethodModel};
use crate::frontend::printer::print_classes;
use crate::frontend::ParsedProject;
use crate::slicer::{slice_body, slice_method_name, AssertionSlice, SliceStore};
use crate::tree::{write_atomic, SourceTree};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

const BACKUP_LIST: &str = "paths.lst";

/// Generated sources for every file holding a partially selected test class.
pub fn rewrite_tests(
    result: &SelectionResult,
    project: &ParsedProject,
    slices: &SliceStore,
) -> Result<BTreeMap<String, String>> {
    let targets: BTreeSet<String> = result
        .affected_classes()
        .into_iter()
        .filter(|c| !result.classes.contains(c))
        .collect();
    let mut out = BTreeMap::new();
    for file in &project.files {
        if !file.all_classes().iter().any(|c| targets.contains(&c.fq_name)) {
            continue;
        }
        let decls = file
            .classes
            .iter()
            .map(|c| rewrite_class(c, &targets, result, slices))
            .collect::<Result<Vec<ClassDecl>>>()?;
        out.insert(file.path.clone(), print_classes(&decls));
    }
    Ok(out)
}

fn rewrite_class(
    class: &ClassModel,
    targets: &BTreeSet<String>,
    result: &SelectionResult,
    slices: &SliceStore,
) -> Result<ClassDecl> {
    let mut decl = class.decl.clone();
    let rewrite_here = targets.contains(&class.fq_name);
    let mut nested = class.nested.iter();
    let mut methods = class.methods.iter();
    let mut members = Vec::with_capacity(decl.members.len());
    for member in decl.members.drain(..) {
        match member {
            Member::Class(_) => {
                let model = nested.next().expect("nested models follow declaration order");
                members.push(Member::Class(rewrite_class(model, targets, result, slices)?));
            }
            Member::Method(md) => {
                let m = methods.next().expect("method models follow declaration order");
                if !rewrite_here || !m.is_test {
                    members.push(Member::Method(md));
                    continue;
                }
                let key = m.signature.key();
                if result.method_selected(&class.fq_name, &key) {
                    members.push(Member::Method(md));
                    continue;
                }
                let picked: Vec<_> = result
                    .slices
                    .iter()
                    .filter(|s| s.class == class.fq_name && s.method == key)
                    .collect();
                let all = slices.method_slices(&class.fq_name, &key).unwrap_or_default();
                for s in picked {
                    let slice = all
                        .get(s.k - 1)
                        .filter(|sl| sl.assertion == s.assertion)
                        .ok_or_else(|| Error::Stale(format!("no slice {} of {}.{key}", s.k, class.fq_name)))?;
                    check_closed(m, slice)?;
                    members.push(Member::Method(MethodDecl {
                        annotations: md.annotations.clone(),
                        is_static: md.is_static,
                        ret: md.ret.clone(),
                        name: slice_method_name(&md.name, s.k),
                        params: Vec::new(),
                        body: slice_body(m, slice),
                    }));
                }
            }
            other => members.push(other),
        }
    }
    decl.members = members;
    Ok(decl)
}

/// Every local a slice reads must be defined inside the slice.
fn check_closed(m: &MethodModel, slice: &AssertionSlice) -> Result<()> {
    let mut defined: BTreeSet<&str> = BTreeSet::new();
    for &i in &slice.statements {
        let s = m.body.get(i).ok_or_else(|| {
            Error::SliceInvariant(format!("{} has no statement {i}", m.signature))
        })?;
        for u in &s.uses {
            if m.local_types.contains_key(u) && !defined.contains(u.as_str()) {
                return Err(Error::SliceInvariant(format!(
                    "slice of {} at {} reads `{u}` defined outside the slice",
                    m.signature, slice.assertion
                )));
            }
        }
        defined.extend(s.defs.iter().map(String::as_str));
    }
    Ok(())
}

/// `tree` with the rewritten files swapped in.
pub fn apply_rewrite(tree: &SourceTree, rewritten: &BTreeMap<String, String>) -> SourceTree {
    let mut out = tree.clone();
    for (path, text) in rewritten {
        out.insert(path.clone(), text.clone());
    }
    out
}

/// Put rewritten sources in place under `project_dir`, backing up the originals
/// and keeping a reference copy under `rewritten_dir`.
pub fn begin_rewrite(
    project_dir: &Path,
    backup_dir: &Path,
    rewritten_dir: &Path,
    rewritten: &BTreeMap<String, String>,
) -> Result<()> {
    restore_tests(project_dir, backup_dir)?;
    if rewritten.is_empty() {
        return Ok(());
    }
    for (path, text) in rewritten {
        let original = project_dir.join(path);
        let bytes = fs::read_to_string(&original).at(&original)?;
        write_atomic(&backup_dir.join(path), &bytes)?;
        write_atomic(&rewritten_dir.join(path), text)?;
    }
    let list: String = rewritten.keys().map(|p| format!("{p}\n")).collect();
    write_atomic(&backup_dir.join(BACKUP_LIST), &list)?;
    for (path, text) in rewritten {
        write_atomic(&project_dir.join(path), text)?;
    }
    Ok(())
}

/// Put the backed-up originals back. A no-op when no rewrite is active.
pub fn restore_tests(project_dir: &Path, backup_dir: &Path) -> Result<Vec<String>> {
    let list_path = backup_dir.join(BACKUP_LIST);
    if !list_path.exists() {
        return Ok(Vec::new());
    }
    let list = fs::read_to_string(&list_path).at(&list_path)?;
    let paths: Vec<String> = list.lines().filter(|l| !l.is_empty()).map(str::to_string).collect();
    for path in &paths {
        let saved = backup_dir.join(path);
        if !saved.exists() {
            return Err(Error::MissingBackup(saved));
        }
        let text = fs::read_to_string(&saved).at(&saved)?;
        write_atomic(&project_dir.join(path), &text)?;
    }
    fs::remove_dir_all(backup_dir).at(backup_dir)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::SliceRef;

    #[test]
    fn restore_without_rewrite_is_a_noop() {
        let d = tempfile::tempdir().unwrap();
        assert!(restore_tests(d.path(), &d.path().join("backup")).unwrap().is_empty());
    }

    #[test]
    fn rewrite_and_restore_roundtrip() {
        let d = tempfile::tempdir().unwrap();
        let project = d.path().join("p");
        let original = "class T {\n  // keep me\n  @Test void t() { assertTrue(true); }\n}\n";
        write_atomic(&project.join("tests/T.mj"), original).unwrap();
        let rewritten = BTreeMap::from([("tests/T.mj".to_string(), "class T { }\n".to_string())]);
        let backup = d.path().join("backup");
        begin_rewrite(&project, &backup, &d.path().join("rw/1"), &rewritten).unwrap();
        assert_eq!(fs::read_to_string(project.join("tests/T.mj")).unwrap(), "class T { }\n");
        assert_eq!(restore_tests(&project, &backup).unwrap(), ["tests/T.mj"]);
        assert_eq!(fs::read_to_string(project.join("tests/T.mj")).unwrap(), original);
        assert!(d.path().join("rw/1/tests/T.mj").exists());
    }

    #[test]
    fn missing_backup_is_reported() {
        let d = tempfile::tempdir().unwrap();
        let backup = d.path().join("backup");
        write_atomic(&backup.join(BACKUP_LIST), "tests/T.mj\n").unwrap();
        assert!(matches!(restore_tests(d.path(), &backup), Err(Error::MissingBackup(_))));
    }

    #[test]
    fn only_selected_tests_survive() {
        let tree = SourceTree::from_files([(
            "tests/T.mj",
            "class T { int seed; @Before void up() { seed = 1; } @Test void a() { int x = 1; assertEq(1, x); assertTrue(true); } @Test void b() { assertTrue(true); } }",
        )]);
        let p = ParsedProject::parse(&tree).unwrap();
        let inv = crate::frontend::enumerate_tests(&p).unwrap();
        let levels = crate::slicer::compute_levels(&inv, false);
        let store = SliceStore::compute(&p, &levels, &crate::frontend::EffectSummary::compute(&p));
        let mut sel = SelectionResult::default();
        sel.slices.insert(SliceRef {
            class: "T".into(),
            method: "a()".into(),
            assertion: 1,
            k: 1,
        });
        let out = rewrite_tests(&sel, &p, &store).unwrap();
        let text = &out["tests/T.mj"];
        assert!(text.contains("void a__slice1()"), "{text}");
        assert!(text.contains("void up()"));
        assert!(!text.contains("void b()"));
        assert!(!text.contains("assertTrue"));
        assert!(rewrite_tests(&SelectionResult::default(), &p, &store).unwrap().is_empty());
    }
}
