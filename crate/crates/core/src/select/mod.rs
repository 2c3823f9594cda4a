//! Mapping changes through the dependency database to assertion slices,
//! test methods and test classes.

mod rewrite;

pub use rewrite::{apply_rewrite, begin_rewrite, restore_tests, rewrite_tests};

use crate::error::Result;
use crate::fingerprint::{ChangeSet, ClassChangeKind, MethodChangeKind, Side};
use crate::frontend::model::declaring_class;
use crate::frontend::{ParsedProject, TestInventory};
use crate::runtime::{DependencyDb, EntityId};
use crate::slicer::{ClassLevels, Level, SliceStore};
use crate::tree::write_atomic;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

/// One production-side entry of δ as seen by retrieval.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChangeKey {
    /// A fully qualified method signature.
    Method(String),
    /// Every signature declared by this class.
    Class(String),
}

impl fmt::Display for ChangeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangeKey::Method(s) => write!(f, "{s}"),
            ChangeKey::Class(c) => write!(f, "{c}.*"),
        }
    }
}

/// Entities whose dependency set is hit by `change`.
pub fn retrieve_test_entities(db: &DependencyDb, change: &ChangeKey) -> BTreeSet<EntityId> {
    db.entries
        .iter()
        .filter(|(_, deps)| match change {
            ChangeKey::Method(sig) => deps.contains(sig),
            ChangeKey::Class(c) => deps.iter().any(|d| declaring_class(d) == c),
        })
        .map(|(e, _)| e.clone())
        .collect()
}

/// A selected assertion slice: `k` is its 1-based position among the method's slices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SliceRef {
    pub class: String,
    pub method: String,
    pub assertion: usize,
    pub k: usize,
}

impl SliceRef {
    pub fn entity(&self) -> EntityId {
        EntityId::Statement(self.class.clone(), self.method.clone(), self.assertion)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelectionResult {
    pub slices: BTreeSet<SliceRef>,
    pub methods: BTreeSet<(String, String)>,
    pub classes: BTreeSet<String>,
    /// Test entities selected because the test code itself changed.
    pub changed_tests: BTreeSet<EntityId>,
    /// First change that pulled in each selected entity.
    pub triggers: BTreeMap<String, String>,
}

impl SelectionResult {
    pub fn is_empty(&self) -> bool {
        self.slices.is_empty() && self.methods.is_empty() && self.classes.is_empty()
    }

    pub fn method_selected(&self, class: &str, key: &str) -> bool {
        self.classes.contains(class) || self.methods.contains(&(class.to_string(), key.to_string()))
    }

    /// Whether any part of test method `(class, key)` runs under this selection.
    pub fn covers_method(&self, class: &str, key: &str) -> bool {
        self.method_selected(class, key) || self.slices.iter().any(|s| s.class == class && s.method == key)
    }

    /// Test classes that need a run.
    pub fn affected_classes(&self) -> BTreeSet<String> {
        let mut out = self.classes.clone();
        out.extend(self.methods.iter().map(|(c, _)| c.clone()));
        out.extend(self.slices.iter().map(|s| s.class.clone()));
        out
    }

    /// Number of test methods the selected run reports.
    pub fn expected_tests_run(&self, inventory: &TestInventory) -> usize {
        let whole: usize = self
            .classes
            .iter()
            .filter_map(|c| inventory.class(c))
            .map(|c| c.test_methods.len() + c.inherited_tests.len())
            .sum();
        let owners: BTreeSet<(&str, &str)> = self.slices.iter().map(|s| (s.class.as_str(), s.method.as_str())).collect();
        whole + self.methods.len() + owners.len()
    }

    fn note(&mut self, entity: String, trigger: &str) {
        self.triggers.entry(entity).or_insert_with(|| trigger.to_string());
    }

    /// Select `class` whole, dropping finer entries it covers.
    pub fn select_class(&mut self, class: &str, trigger: &str) {
        self.note(EntityId::Class(class.to_string()).to_string(), trigger);
        self.classes.insert(class.to_string());
        self.normalize();
    }

    /// Drop finer entries covered by coarser ones.
    fn normalize(&mut self) {
        let classes = &self.classes;
        self.methods.retain(|(c, _)| !classes.contains(c));
        let methods = &self.methods;
        self.slices
            .retain(|s| !classes.contains(&s.class) && !methods.contains(&(s.class.clone(), s.method.clone())));
    }

    /// Selection manifest rows: level, entity id, triggering change.
    pub fn manifest_rows(&self) -> Vec<(char, String, String)> {
        let trigger = |id: &str| self.triggers.get(id).cloned().unwrap_or_else(|| "-".into());
        let mut rows = Vec::new();
        for c in &self.classes {
            let id = EntityId::Class(c.clone()).to_string();
            rows.push(('C', id.clone(), trigger(&id)));
        }
        for (c, k) in &self.methods {
            let id = EntityId::Method(c.clone(), k.clone()).to_string();
            rows.push(('M', id.clone(), trigger(&id)));
        }
        for s in &self.slices {
            let id = s.entity().to_string();
            rows.push(('A', id.clone(), trigger(&id)));
        }
        rows
    }

    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        let text: String = self
            .manifest_rows()
            .into_iter()
            .map(|(l, id, t)| format!("{l}\t{id}\t{t}\n"))
            .collect();
        write_atomic(path, &text)
    }
}

/// The current revision as seen by selection.
pub struct SelectContext<'a> {
    pub project: &'a ParsedProject,
    pub inventory: &'a TestInventory,
    pub levels: &'a BTreeMap<String, ClassLevels>,
    /// Superclass links of the previous revision, for subclasses of changed classes.
    pub old_hierarchy: &'a BTreeMap<String, Option<String>>,
}

fn descendants_in(hierarchy: &BTreeMap<String, Option<String>>, class: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![class.to_string()];
    while let Some(c) = frontier.pop() {
        for (sub, sup) in hierarchy {
            if sup.as_deref() == Some(c.as_str()) && out.insert(sub.clone()) {
                frontier.push(sub.clone());
            }
        }
    }
    out
}

/// Select test entities for `delta`.
pub fn select_tests(
    slices: &SliceStore,
    db: &DependencyDb,
    delta: &ChangeSet,
    ctx: &SelectContext<'_>,
) -> Result<SelectionResult> {
    let mut result = SelectionResult::default();
    let is_test_class = |c: &str| ctx.levels.contains_key(c);

    let mut keys: BTreeSet<ChangeKey> = BTreeSet::new();
    for m in delta.methods.values() {
        keys.insert(ChangeKey::Method(m.signature()));
    }
    for c in delta.classes.values() {
        if c.side == Side::Test && is_test_class(&c.class) {
            continue;
        }
        keys.insert(ChangeKey::Class(c.class.clone()));
        let mut subs = ctx.project.descendants(&c.class);
        subs.extend(descendants_in(ctx.old_hierarchy, &c.class));
        keys.extend(subs.into_iter().map(ChangeKey::Class));
    }

    for key in &keys {
        let trigger = key.to_string();
        for entity in retrieve_test_entities(db, key) {
            place_entity(&mut result, &entity, slices, ctx, &trigger);
        }
    }

    select_changed_tests(&mut result, delta, ctx);
    result.normalize();
    Ok(result)
}

fn place_entity(
    result: &mut SelectionResult,
    entity: &EntityId,
    slices: &SliceStore,
    ctx: &SelectContext<'_>,
    trigger: &str,
) {
    let class = entity.class();
    let Some(levels) = ctx.levels.get(class) else {
        return;
    };
    if levels.is_class_level() || matches!(entity, EntityId::Class(_)) {
        result.classes.insert(class.to_string());
        result.note(EntityId::Class(class.to_string()).to_string(), trigger);
        return;
    }
    let key = entity.method_key().expect("method or statement entity");
    let Some(model) = ctx.project.method(class, key).filter(|m| m.is_test) else {
        return;
    };
    let whole = |result: &mut SelectionResult| {
        result.methods.insert((class.to_string(), key.to_string()));
        result.note(EntityId::Method(class.to_string(), key.to_string()).to_string(), trigger);
    };
    let EntityId::Statement(_, _, ordinal) = entity else {
        return whole(result);
    };
    let sliced = levels.method(key).is_some_and(|l| l.level == Level::Assertion);
    let method_slices = slices.method_slices(class, key).unwrap_or_default();
    if !sliced || method_slices.is_empty() || *ordinal >= model.body.len() {
        return whole(result);
    }
    let hits: Vec<SliceRef> = method_slices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.contains(*ordinal))
        .map(|(i, s)| SliceRef {
            class: class.to_string(),
            method: key.to_string(),
            assertion: s.assertion,
            k: i + 1,
        })
        .collect();
    if hits.is_empty() {
        // a statement outside every slice can still fail the method on its own
        return whole(result);
    }
    for h in hits {
        result.note(h.entity().to_string(), trigger);
        result.slices.insert(h);
    }
}

fn select_changed_tests(result: &mut SelectionResult, delta: &ChangeSet, ctx: &SelectContext<'_>) {
    let mut whole_classes = BTreeSet::new();
    for c in delta.test_classes() {
        if c.kind != ClassChangeKind::Deleted && ctx.levels.contains_key(&c.class) {
            whole_classes.insert(c.class.clone());
        }
    }
    for m in delta.test_methods() {
        if m.kind == MethodChangeKind::Deleted || !ctx.levels.contains_key(&m.class) {
            continue;
        }
        let levels = &ctx.levels[&m.class];
        match ctx.project.method(&m.class, &m.key) {
            Some(model) if model.is_test && !levels.is_class_level() => {
                result.methods.insert((m.class.clone(), m.key.clone()));
                let id = EntityId::Method(m.class.clone(), m.key.clone());
                result.note(id.to_string(), &m.signature());
                result.changed_tests.insert(id);
            }
            Some(model) if model.is_helper => {}
            _ => {
                whole_classes.insert(m.class.clone());
            }
        }
    }
    for class in whole_classes {
        let mut group = BTreeSet::from([class.clone()]);
        group.extend(ctx.project.descendants(&class));
        for c in group.into_iter().filter(|c| ctx.levels.contains_key(c)) {
            let id = EntityId::Class(c.clone());
            result.note(id.to_string(), &format!("{class}.*"));
            result.changed_tests.insert(id);
            result.classes.insert(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::TraceSink;

    fn db(entries: &[(&str, &[&str])]) -> DependencyDb {
        let mut sink = TraceSink::new();
        for (id, deps) in entries {
            sink.open(id);
            for d in *deps {
                sink.record(d);
            }
            sink.close(id);
        }
        sink.finish().unwrap()
    }

    #[test]
    fn retrieval_by_method_and_by_class() {
        let d = db(&[
            ("S=T#a()@0", &["C.C(int)", "C.f()"]),
            ("S=T#a()@1", &["D.g()"]),
            ("M=T#b()", &[]),
        ]);
        let hit = retrieve_test_entities(&d, &ChangeKey::Method("C.f()".into()));
        assert_eq!(hit.len(), 1);
        let hit = retrieve_test_entities(&d, &ChangeKey::Class("D".into()));
        assert_eq!(hit.into_iter().map(|e| e.to_string()).collect::<Vec<_>>(), ["S=T#a()@1"]);
        assert!(retrieve_test_entities(&d, &ChangeKey::Method("Z.z()".into())).is_empty());
    }

    #[test]
    fn class_retrieval_matches_a_linear_scan() {
        let d = db(&[
            ("S=T#a()@0", &["Complex.Complex(float,float)", "Complex.negate()"]),
            ("S=T#a()@1", &["Other.f()"]),
            ("M=U#b()", &["Complex.exp()"]),
            ("C=V", &["Complexity.f()"]),
        ]);
        let got = retrieve_test_entities(&d, &ChangeKey::Class("Complex".into()));
        let scan: BTreeSet<EntityId> = d
            .entries
            .iter()
            .filter(|(_, s)| s.iter().any(|sig| sig.starts_with("Complex.")))
            .map(|(e, _)| e.clone())
            .collect();
        assert_eq!(got, scan);
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn coarser_levels_win() {
        let mut r = SelectionResult::default();
        r.classes.insert("A".into());
        r.methods.insert(("A".into(), "f()".into()));
        r.methods.insert(("B".into(), "g()".into()));
        r.slices.insert(SliceRef {
            class: "B".into(),
            method: "g()".into(),
            assertion: 1,
            k: 1,
        });
        r.slices.insert(SliceRef {
            class: "B".into(),
            method: "h()".into(),
            assertion: 0,
            k: 1,
        });
        r.normalize();
        assert_eq!(r.methods.len(), 1);
        assert_eq!(r.slices.len(), 1);
    }
}
