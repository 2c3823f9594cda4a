//! Source-to-source instrumentation and the instrumented copy of a project.

use crate::error::{Error, IoContext, Result};
use crate::fingerprint::store::read_rows;
use crate::fingerprint::{smart_checksum, ChangeSet, Fragment};
use crate::frontend::ast::*;
use crate::frontend::model::{ClassModel, MethodModel, SourceFile};
use crate::frontend::printer::print_classes;
use crate::frontend::ParsedProject;
use crate::runtime::{EntityId, TRACED, TRACE_CLASS};
use crate::slicer::{ClassLevels, Level};
use crate::tree::write_atomic;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

const MANIFEST: &str = "manifest.tsv";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InstrumentOptions {
    /// Emit method markers around statement markers so both granularities are traced.
    pub debug_both: bool,
}

/// Instrument one file for the given test-class levels.
pub fn instrument_file(file: &SourceFile, levels: &BTreeMap<String, ClassLevels>) -> String {
    instrument_file_with(file, levels, InstrumentOptions::default())
}

pub fn instrument_file_with(
    file: &SourceFile,
    levels: &BTreeMap<String, ClassLevels>,
    opts: InstrumentOptions,
) -> String {
    if file.classes.is_empty() {
        return file.text.clone();
    }
    let decls: Vec<ClassDecl> = file
        .classes
        .iter()
        .map(|c| instrument_class(c, levels, opts))
        .collect();
    print_classes(&decls)
}

fn trace_call(signature: &str) -> Stmt {
    Stmt::Expr(Expr::Call {
        receiver: Some(Box::new(Expr::Ident("sys".into()))),
        name: "trace".into(),
        args: vec![Expr::Str(signature.to_string())],
    })
}

fn with_entry_log(m: &MethodModel) -> MethodDecl {
    let mut decl = m.decl.clone();
    decl.body.insert(0, trace_call(&m.signature.to_string()));
    decl
}

fn statement_markers(class: &str, m: &MethodModel) -> Vec<Stmt> {
    let key = m.signature.key();
    m.decl
        .body
        .iter()
        .enumerate()
        .map(|(i, s)| Stmt::Trace {
            entity: EntityId::Statement(class.to_string(), key.clone(), i).to_string(),
            body: vec![s.clone()],
        })
        .collect()
}

fn method_marker(class: &str, m: &MethodModel, body: Vec<Stmt>) -> Vec<Stmt> {
    vec![Stmt::Trace {
        entity: EntityId::Method(class.to_string(), m.signature.key()).to_string(),
        body,
    }]
}

fn instrument_class(class: &ClassModel, levels: &BTreeMap<String, ClassLevels>, opts: InstrumentOptions) -> ClassDecl {
    let mut decl = class.decl.clone();
    let test_levels = levels.get(&class.fq_name);
    let mut nested = class.nested.iter();
    let mut methods = class.methods.iter();
    for member in &mut decl.members {
        match member {
            Member::Class(c) => {
                let model = nested.next().expect("nested models follow declaration order");
                *c = instrument_class(model, levels, opts);
            }
            Member::Method(md) => {
                let m = methods.next().expect("method models follow declaration order");
                *md = match test_levels {
                    None => with_entry_log(m),
                    Some(_) if m.is_helper => with_entry_log(m),
                    Some(l) if m.is_test && !l.is_class_level() => {
                        let mut d = m.decl.clone();
                        d.body = match l.method(&m.signature.key()).map(|s| s.level) {
                            Some(Level::Assertion) if opts.debug_both => {
                                method_marker(&class.fq_name, m, statement_markers(&class.fq_name, m))
                            }
                            Some(Level::Assertion) => statement_markers(&class.fq_name, m),
                            _ => method_marker(&class.fq_name, m, d.body),
                        };
                        d
                    }
                    Some(_) => m.decl.clone(),
                };
            }
            _ => {}
        }
    }
    match test_levels {
        None => {
            decl.annotations.push(Annotation::marker(TRACED));
            if !class.methods.iter().any(|m| m.is_constructor) {
                let sig = format!("{}.{}()", class.fq_name, class.name());
                decl.members.push(Member::Method(MethodDecl {
                    annotations: Vec::new(),
                    is_static: false,
                    ret: None,
                    name: class.name().to_string(),
                    params: Vec::new(),
                    body: vec![trace_call(&sig)],
                }));
            }
        }
        Some(l) if l.is_class_level() => decl.annotations.push(Annotation {
            name: TRACE_CLASS.into(),
            args: vec![(
                "id".into(),
                AnnotationValue::Str(EntityId::Class(class.fq_name.clone()).to_string()),
            )],
        }),
        Some(_) => {}
    }
    decl
}

/// Stable text describing the levels of every test class in `file`.
fn levels_tag(file: &SourceFile, levels: &BTreeMap<String, ClassLevels>) -> String {
    let mut parts = Vec::new();
    for c in file.all_classes() {
        if let Some(l) = levels.get(&c.fq_name) {
            let mut tag = format!("{}:{}", c.fq_name, l.class.level.letter());
            if !l.is_class_level() {
                for (k, m) in &l.methods {
                    tag.push_str(&format!(",{k}={}", m.level.letter()));
                }
            }
            parts.push(tag);
        }
    }
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(";")
    }
}

fn file_sum(file: &SourceFile) -> String {
    smart_checksum(Fragment::File(&file.decls()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub source_sum: String,
    pub levels: String,
}

/// A mirror of the project holding instrumented sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentedCopy {
    pub root: PathBuf,
    pub manifest: BTreeMap<String, ManifestEntry>,
}

impl InstrumentedCopy {
    /// Instrument every file of `project` into a fresh `root`.
    pub fn build(root: &Path, project: &ParsedProject, levels: &BTreeMap<String, ClassLevels>) -> Result<InstrumentedCopy> {
        if root.exists() {
            fs::remove_dir_all(root).at(root)?;
        }
        fs::create_dir_all(root).at(root)?;
        let mut copy = InstrumentedCopy {
            root: root.to_path_buf(),
            manifest: BTreeMap::new(),
        };
        for file in &project.files {
            copy.put(file, levels)?;
        }
        copy.write_manifest()?;
        Ok(copy)
    }

    pub fn open(root: &Path) -> Result<InstrumentedCopy> {
        let path = root.join(MANIFEST);
        if !path.exists() {
            return Err(Error::MissingCopy(root.to_path_buf()));
        }
        let manifest = read_rows(&path, 3)?
            .into_iter()
            .map(|r| {
                (
                    r[0].clone(),
                    ManifestEntry {
                        source_sum: r[1].clone(),
                        levels: r[2].clone(),
                    },
                )
            })
            .collect();
        Ok(InstrumentedCopy {
            root: root.to_path_buf(),
            manifest,
        })
    }

    fn put(&mut self, file: &SourceFile, levels: &BTreeMap<String, ClassLevels>) -> Result<()> {
        write_atomic(&self.root.join(&file.path), &instrument_file(file, levels))?;
        self.manifest.insert(
            file.path.clone(),
            ManifestEntry {
                source_sum: file_sum(file),
                levels: levels_tag(file, levels),
            },
        );
        Ok(())
    }

    fn write_manifest(&self) -> Result<()> {
        let text: String = self
            .manifest
            .iter()
            .map(|(p, e)| format!("{p}\t{}\t{}\n", e.source_sum, e.levels))
            .collect();
        write_atomic(&self.root.join(MANIFEST), &text)
    }

    /// Whether `file` is already instrumented for `levels`.
    pub fn is_current(&self, file: &SourceFile, levels: &BTreeMap<String, ClassLevels>) -> bool {
        self.manifest
            .get(&file.path)
            .is_some_and(|e| e.source_sum == file_sum(file) && e.levels == levels_tag(file, levels))
    }
}

/// Re-instrument the files touched by `changes` (and any file whose test
/// levels moved), drop deleted files, and return the paths written or removed.
pub fn sync_instrumented_copy(
    copy: &mut InstrumentedCopy,
    changes: &ChangeSet,
    project: &ParsedProject,
    levels: &BTreeMap<String, ClassLevels>,
) -> Result<Vec<String>> {
    if !copy.root.join(MANIFEST).exists() {
        return Err(Error::MissingCopy(copy.root.clone()));
    }
    let mut touched = BTreeSet::new();
    for path in &changes.files {
        match project.file(path) {
            Some(file) => {
                if !copy.is_current(file, levels) {
                    copy.put(file, levels)?;
                    touched.insert(path.clone());
                }
            }
            None => {
                let p = copy.root.join(path);
                if p.exists() {
                    fs::remove_file(&p).at(&p)?;
                }
                if copy.manifest.remove(path).is_some() {
                    touched.insert(path.clone());
                }
            }
        }
    }
    for file in &project.files {
        if !touched.contains(&file.path) && !copy.is_current(file, levels) {
            copy.put(file, levels)?;
            touched.insert(file.path.clone());
        }
    }
    copy.write_manifest()?;
    Ok(touched.into_iter().collect())
}
