use super::{checksum_text, smart_checksum, Fragment};
use crate::error::{Error, IoContext, Result};
use crate::frontend::model::ClassModel;
use crate::frontend::ParsedProject;
use crate::tree::write_atomic;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub const HASH_ALGORITHM: &str = "sha256";
pub const STORE_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub path: String,
    pub superclass: Option<String>,
    pub head_sum: String,
    pub others_sum: String,
}

/// Checksums of one revision: files, class heads/others, methods.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChecksumStore {
    pub files: BTreeMap<String, String>,
    pub classes: BTreeMap<String, ClassEntry>,
    /// class fq name → method key → checksum
    pub methods: BTreeMap<String, BTreeMap<String, String>>,
    pub revision_id: String,
}

impl ChecksumStore {
    pub fn from_project(project: &ParsedProject) -> ChecksumStore {
        let mut store = ChecksumStore::default();
        for file in &project.files {
            store
                .files
                .insert(file.path.clone(), smart_checksum(Fragment::File(&file.decls())));
            for class in file.all_classes() {
                store.add_class(class, project);
            }
        }
        store.revision_id = revision_id(&store.files);
        store
    }

    fn add_class(&mut self, class: &ClassModel, project: &ParsedProject) {
        let superclass = project
            .superclass(&class.fq_name)
            .map(|s| s.fq_name.clone())
            .or_else(|| class.head.superclass.clone());
        self.classes.insert(
            class.fq_name.clone(),
            ClassEntry {
                path: class.path.clone(),
                superclass,
                head_sum: smart_checksum(Fragment::Head(&class.decl)),
                others_sum: smart_checksum(Fragment::Others(&class.others)),
            },
        );
        let methods = class
            .methods
            .iter()
            .map(|m| (m.signature.key(), smart_checksum(Fragment::Method(&m.decl))))
            .collect();
        self.methods.insert(class.fq_name.clone(), methods);
    }

    pub fn classes_in(&self, path: &str) -> impl Iterator<Item = &str> {
        let path = path.to_string();
        self.classes
            .iter()
            .filter(move |(_, e)| e.path == path)
            .map(|(n, _)| n.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut files = String::new();
        for (p, s) in &self.files {
            files.push_str(&format!("{p}\t{s}\n"));
        }
        let mut classes = String::new();
        let mut classfiles = String::new();
        for (n, e) in &self.classes {
            classes.push_str(&format!("{n}\t{}\t{}\n", e.head_sum, e.others_sum));
            let sup = e.superclass.as_deref().unwrap_or("-");
            classfiles.push_str(&format!("{n}\t{}\t{sup}\n", e.path));
        }
        let mut methods = String::new();
        for (class, ms) in &self.methods {
            let mut rows: Vec<String> = ms
                .iter()
                .map(|(k, s)| format!("{class}\t{class}.{k}\t{s}\n"))
                .collect();
            rows.sort();
            methods.extend(rows);
        }
        let meta = format!(
            "algorithm\t{HASH_ALGORITHM}\nrevision\t{}\nversion\t{STORE_VERSION}\n",
            self.revision_id
        );
        write_atomic(&dir.join("files.tsv"), &files)?;
        write_atomic(&dir.join("classes.tsv"), &classes)?;
        write_atomic(&dir.join("classfiles.tsv"), &classfiles)?;
        write_atomic(&dir.join("methods.tsv"), &methods)?;
        write_atomic(&dir.join("meta.tsv"), &meta)
    }

    pub fn read(dir: &Path) -> Result<ChecksumStore> {
        let meta = read_rows(&dir.join("meta.tsv"), 2)?;
        let meta: BTreeMap<String, String> = meta.into_iter().map(|r| (r[0].clone(), r[1].clone())).collect();
        let version = meta.get("version").cloned().unwrap_or_default();
        if version != STORE_VERSION {
            return Err(Error::StoreVersion {
                found: version,
                expected: STORE_VERSION.to_string(),
            });
        }
        let algorithm = meta.get("algorithm").cloned().unwrap_or_default();
        if algorithm != HASH_ALGORITHM {
            return Err(Error::StoreVersion {
                found: algorithm,
                expected: HASH_ALGORITHM.to_string(),
            });
        }
        let mut store = ChecksumStore {
            revision_id: meta.get("revision").cloned().unwrap_or_default(),
            ..ChecksumStore::default()
        };
        for r in read_rows(&dir.join("files.tsv"), 2)? {
            store.files.insert(r[0].clone(), r[1].clone());
        }
        let places: BTreeMap<String, (String, Option<String>)> = read_rows(&dir.join("classfiles.tsv"), 3)?
            .into_iter()
            .map(|r| {
                let sup = (r[2] != "-").then(|| r[2].clone());
                (r[0].clone(), (r[1].clone(), sup))
            })
            .collect();
        for r in read_rows(&dir.join("classes.tsv"), 3)? {
            let (path, superclass) = places.get(&r[0]).cloned().ok_or_else(|| Error::Store {
                path: dir.join("classfiles.tsv"),
                message: format!("no file recorded for class {}", r[0]),
            })?;
            store.classes.insert(
                r[0].clone(),
                ClassEntry {
                    path,
                    superclass,
                    head_sum: r[1].clone(),
                    others_sum: r[2].clone(),
                },
            );
            store.methods.entry(r[0].clone()).or_default();
        }
        for r in read_rows(&dir.join("methods.tsv"), 3)? {
            let key = r[1]
                .strip_prefix(&format!("{}.", r[0]))
                .ok_or_else(|| Error::Store {
                    path: dir.join("methods.tsv"),
                    message: format!("signature {} outside class {}", r[1], r[0]),
                })?
                .to_string();
            store.methods.entry(r[0].clone()).or_default().insert(key, r[2].clone());
        }
        Ok(store)
    }
}

/// Revision identity: checksum of the sorted `(path, sum)` list.
pub fn revision_id(files: &BTreeMap<String, String>) -> String {
    let text: String = files.iter().map(|(p, s)| format!("{p}\t{s}\n")).collect();
    checksum_text(&text)
}

pub(crate) fn read_rows(path: &Path, width: usize) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_string).collect();
        if cols.len() != width {
            return Err(Error::Store {
                path: path.to_path_buf(),
                message: format!("line {}: expected {width} columns, found {}", i + 1, cols.len()),
            });
        }
        rows.push(cols);
    }
    Ok(rows)
}
