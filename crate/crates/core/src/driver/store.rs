use crate::error::{Error, IoContext, Result};
use crate::tree::write_atomic;
use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

pub const STORE_DIR: &str = ".selertion";
pub const STORE_ENV: &str = "SELERTION_STORE";
pub const LAYOUT_VERSION: &str = "1";

/// Directory layout of a store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Store {
    pub root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Store {
        Store { root: root.into() }
    }

    /// `explicit`, else `$SELERTION_STORE`, else `<project>/.selertion`.
    pub fn resolve(project_dir: &Path, explicit: Option<&Path>) -> Store {
        if let Some(p) = explicit {
            return Store::new(p);
        }
        match std::env::var_os(STORE_ENV) {
            Some(p) if !p.is_empty() => Store::new(PathBuf::from(p)),
            _ => Store::new(project_dir.join(STORE_DIR)),
        }
    }

    pub fn state_file(&self) -> PathBuf {
        self.root.join("state.tsv")
    }
    pub fn checksums(&self) -> PathBuf {
        self.root.join("checksums")
    }
    /// Checksums of the revision the dependency database was collected on.
    pub fn collected(&self) -> PathBuf {
        self.root.join("collected")
    }
    pub fn slices(&self) -> PathBuf {
        self.root.join("slices")
    }
    pub fn deps(&self) -> PathBuf {
        self.root.join("deps")
    }
    pub fn instrumented(&self) -> PathBuf {
        self.root.join("instrumented")
    }
    pub fn backup(&self) -> PathBuf {
        self.root.join("backup")
    }
    pub fn rewritten(&self, revision: &str) -> PathBuf {
        self.root.join("rewritten").join(revision)
    }
    pub fn report(&self, revision: &str) -> PathBuf {
        self.root.join("reports").join(format!("{revision}.report.tsv"))
    }
    pub fn selection(&self, revision: &str) -> PathBuf {
        self.root.join("selection").join(format!("{revision}.tsv"))
    }
    pub fn metrics(&self, revision: &str) -> PathBuf {
        self.root.join("metrics").join(format!("{revision}.tsv"))
    }

    pub fn is_initialized(&self) -> bool {
        self.state_file().exists()
    }

    /// Take the store's writer lock until the guard drops.
    pub fn lock(&self) -> Result<StoreLock> {
        fs::create_dir_all(&self.root).at(&self.root)?;
        let path = self.root.join("lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => {
                fs::write(&path, std::process::id().to_string()).at(&path)?;
                Ok(StoreLock { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(e) => Err(Error::Io { path, source: e }),
        }
    }
}

#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreState {
    pub layout_version: String,
    pub last_revision: String,
    /// Whether the dependency database reflects the last analyzed revision.
    pub collection_current: bool,
}

impl StoreState {
    pub fn read(store: &Store) -> Result<StoreState> {
        let path = store.state_file();
        if !path.exists() {
            return Err(Error::NotInitialized(store.root.clone()));
        }
        let text = fs::read_to_string(&path).at(&path)?;
        let mut version = None;
        let mut revision = None;
        let mut current = None;
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('\t').ok_or_else(|| Error::Store {
                path: path.clone(),
                message: format!("malformed line `{line}`"),
            })?;
            match k {
                "layoutVersion" => version = Some(v.to_string()),
                "lastRevision" => revision = Some(v.to_string()),
                "collectionCurrent" => current = Some(v == "true"),
                _ => {}
            }
        }
        let missing = |what: &str| Error::Store {
            path: path.clone(),
            message: format!("missing {what}"),
        };
        let state = StoreState {
            layout_version: version.ok_or_else(|| missing("layoutVersion"))?,
            last_revision: revision.ok_or_else(|| missing("lastRevision"))?,
            collection_current: current.ok_or_else(|| missing("collectionCurrent"))?,
        };
        if state.layout_version != LAYOUT_VERSION {
            return Err(Error::StoreVersion {
                found: state.layout_version,
                expected: LAYOUT_VERSION.into(),
            });
        }
        Ok(state)
    }

    pub fn write(&self, store: &Store) -> Result<()> {
        write_atomic(
            &store.state_file(),
            &format!(
                "layoutVersion\t{}\nlastRevision\t{}\ncollectionCurrent\t{}\n",
                self.layout_version, self.last_revision, self.collection_current
            ),
        )
    }
}
