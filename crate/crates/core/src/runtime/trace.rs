use crate::error::{Error, IoContext, Result};
use crate::slicer::Level;
use crate::tree::write_atomic;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

/// A traceable test entity: `C=<class>`, `M=<class>#<key>` or `S=<class>#<key>@<ordinal>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    Class(String),
    Method(String, String),
    Statement(String, String, usize),
}

impl EntityId {
    pub fn class(&self) -> &str {
        match self {
            EntityId::Class(c) | EntityId::Method(c, _) | EntityId::Statement(c, _, _) => c,
        }
    }

    pub fn method_key(&self) -> Option<&str> {
        match self {
            EntityId::Class(_) => None,
            EntityId::Method(_, k) | EntityId::Statement(_, k, _) => Some(k),
        }
    }

    pub fn level(&self) -> Level {
        match self {
            EntityId::Class(_) => Level::Class,
            EntityId::Method(..) => Level::Method,
            EntityId::Statement(..) => Level::Assertion,
        }
    }

    pub fn parse(text: &str) -> Result<EntityId> {
        let bad = || Error::BadEntityId(text.to_string());
        let (prefix, rest) = text.split_once('=').ok_or_else(bad)?;
        match prefix {
            "C" if !rest.is_empty() && !rest.contains('#') => Ok(EntityId::Class(rest.to_string())),
            "M" => {
                let (c, k) = rest.split_once('#').ok_or_else(bad)?;
                if c.is_empty() || !k.ends_with(')') {
                    return Err(bad());
                }
                Ok(EntityId::Method(c.to_string(), k.to_string()))
            }
            "S" => {
                let (c, rest) = rest.split_once('#').ok_or_else(bad)?;
                let (k, ord) = rest.rsplit_once('@').ok_or_else(bad)?;
                let ord = ord.parse().map_err(|_| bad())?;
                if c.is_empty() || !k.ends_with(')') {
                    return Err(bad());
                }
                Ok(EntityId::Statement(c.to_string(), k.to_string(), ord))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Class(c) => write!(f, "C={c}"),
            EntityId::Method(c, k) => write!(f, "M={c}#{k}"),
            EntityId::Statement(c, k, o) => write!(f, "S={c}#{k}@{o}"),
        }
    }
}

/// Folds trace events into per-entity dependency sets as they arrive.
#[derive(Debug, Default)]
pub struct TraceSink {
    stack: Vec<String>,
    deps: BTreeMap<String, BTreeSet<String>>,
    /// Calls made with no scope open, per test class (setup, field initializers).
    ambient: BTreeMap<String, BTreeSet<String>>,
    current_class: Option<String>,
    captures: Vec<BTreeSet<String>>,
    error: Option<String>,
}

impl TraceSink {
    pub fn new() -> TraceSink {
        TraceSink::default()
    }

    pub fn set_class(&mut self, class: Option<&str>) {
        self.current_class = class.map(str::to_string);
    }

    pub fn open(&mut self, entity: &str) {
        self.deps.entry(entity.to_string()).or_default();
        self.stack.push(entity.to_string());
    }

    pub fn close(&mut self, entity: &str) {
        match self.stack.pop() {
            Some(top) if top == entity => {}
            Some(top) => self.fail(format!("closing {entity} while {top} is open")),
            None => self.fail(format!("closing {entity} with no open scope")),
        }
    }

    fn fail(&mut self, message: String) {
        if self.error.is_none() {
            self.error = Some(message);
        }
    }

    pub fn record(&mut self, signature: &str) {
        for cap in &mut self.captures {
            cap.insert(signature.to_string());
        }
        if self.stack.is_empty() {
            if let Some(c) = &self.current_class {
                self.ambient.entry(c.clone()).or_default().insert(signature.to_string());
            }
            return;
        }
        for id in &self.stack {
            if let Some(set) = self.deps.get_mut(id) {
                set.insert(signature.to_string());
            }
        }
    }

    /// Start collecting every recorded signature (used around static initialization).
    pub fn begin_capture(&mut self) {
        self.captures.push(BTreeSet::new());
    }

    pub fn end_capture(&mut self) -> BTreeSet<String> {
        self.captures.pop().unwrap_or_default()
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Close the run: check balance and fold ambient calls into the entities of their class.
    pub fn finish(mut self) -> Result<DependencyDb> {
        if let Some(top) = self.stack.last() {
            self.fail(format!("{top} never closed"));
        }
        if let Some(e) = self.error {
            return Err(Error::MarkerImbalance(e));
        }
        let mut db = DependencyDb::default();
        for (id, set) in self.deps {
            let entity = EntityId::parse(&id)?;
            let mut set = set;
            if let Some(amb) = self.ambient.get(entity.class()) {
                set.extend(amb.iter().cloned());
            }
            db.entries.insert(entity, set);
        }
        Ok(db)
    }
}

/// Test entity → fully qualified signatures it invoked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyDb {
    pub entries: BTreeMap<EntityId, BTreeSet<String>>,
}

impl DependencyDb {
    pub fn get(&self, id: &EntityId) -> Option<&BTreeSet<String>> {
        self.entries.get(id)
    }

    pub fn entities_of(&self, class: &str) -> impl Iterator<Item = &EntityId> {
        let class = class.to_string();
        self.entries.keys().filter(move |e| e.class() == class)
    }

    pub fn remove_class(&mut self, class: &str) {
        self.entries.retain(|e, _| e.class() != class);
    }

    pub fn remove_method(&mut self, class: &str, key: &str) {
        self.entries
            .retain(|e, _| !(e.class() == class && e.method_key() == Some(key)));
    }

    /// Replace every entity of `classes` with the entries of `fresh`.
    pub fn replace_classes(&mut self, classes: &BTreeSet<String>, fresh: DependencyDb) {
        self.entries.retain(|e, _| !classes.contains(e.class()));
        self.entries.extend(fresh.entries);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        if dir.exists() {
            fs::remove_dir_all(dir).at(dir)?;
        }
        fs::create_dir_all(dir).at(dir)?;
        for (id, set) in &self.entries {
            let text: String = set.iter().map(|s| format!("{s}\n")).collect();
            write_atomic(&dir.join(format!("{id}.dep")), &text)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<DependencyDb> {
        let mut db = DependencyDb::default();
        if !dir.exists() {
            return Ok(db);
        }
        for entry in fs::read_dir(dir).at(dir)? {
            let path = entry.at(dir)?.path();
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let Some(id) = name.strip_suffix(".dep") else {
                continue;
            };
            let text = fs::read_to_string(&path).at(&path)?;
            let set = text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect();
            db.entries.insert(EntityId::parse(id)?, set);
        }
        Ok(db)
    }
}
