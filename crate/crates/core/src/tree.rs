//! Source trees: the `.mj` files of one project revision, keyed by relative path.

use crate::error::{IoContext, Result};
use crate::frontend::model::{SRC_ROOT, TEST_ROOT};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceTree {
    files: BTreeMap<String, String>,
}

impl SourceTree {
    pub fn new() -> SourceTree {
        SourceTree::default()
    }

    pub fn from_files<I, P, T>(files: I) -> SourceTree
    where
        I: IntoIterator<Item = (P, T)>,
        P: Into<String>,
        T: Into<String>,
    {
        SourceTree {
            files: files
                .into_iter()
                .map(|(p, t)| (p.into(), t.into()))
                .collect(),
        }
    }

    /// Read every `.mj` file under `src/` and `tests/` of `root`.
    pub fn load(root: &Path) -> Result<SourceTree> {
        let mut files = BTreeMap::new();
        for sub in [SRC_ROOT, TEST_ROOT] {
            let dir = root.join(sub);
            if dir.is_dir() {
                collect(root, &dir, &mut files)?;
            }
        }
        Ok(SourceTree { files })
    }

    /// Write all files under `root`, replacing any existing `src/` and `tests/`.
    pub fn write_to(&self, root: &Path) -> Result<()> {
        for sub in [SRC_ROOT, TEST_ROOT] {
            let dir = root.join(sub);
            if dir.exists() {
                fs::remove_dir_all(&dir).at(&dir)?;
            }
        }
        for (path, text) in &self.files {
            write_atomic(&root.join(path), text)?;
        }
        Ok(())
    }

    pub fn sources(&self) -> impl Iterator<Item = (&str, &str)> {
        self.files.iter().map(|(p, t)| (p.as_str(), t.as_str()))
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }

    pub fn insert(&mut self, path: impl Into<String>, text: impl Into<String>) {
        self.files.insert(path.into(), text.into());
    }

    pub fn remove(&mut self, path: &str) -> Option<String> {
        self.files.remove(path)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

fn collect(root: &Path, dir: &Path, files: &mut BTreeMap<String, String>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .at(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .at(dir)?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect(root, &path, files)?;
        } else if path.extension().is_some_and(|e| e == "mj") {
            let text = fs::read_to_string(&path).at(&path)?;
            let rel = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            files.insert(rel, text);
        }
    }
    Ok(())
}

/// Write through a temporary sibling and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).at(parent)?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).at(&tmp)?;
    fs::rename(&tmp, path).at(path)?;
    Ok(())
}
