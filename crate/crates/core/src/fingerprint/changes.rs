use super::store::ChecksumStore;
use crate::frontend::model::is_test_path;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Production,
    Test,
}

impl Side {
    pub fn of_path(path: &str) -> Side {
        if is_test_path(path) {
            Side::Test
        } else {
            Side::Production
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassChangeKind {
    Added,
    Deleted,
    HeadChanged,
    OtherChanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MethodChangeKind {
    Added,
    Deleted,
    Changed,
    Lookup,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassChange {
    pub class: String,
    pub kind: ClassChangeKind,
    pub side: Side,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodChange {
    pub class: String,
    /// Class-local key, `name(types)`.
    pub key: String,
    pub kind: MethodChangeKind,
    pub side: Side,
}

impl MethodChange {
    pub fn signature(&self) -> String {
        format!("{}.{}", self.class, self.key)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeSet {
    pub classes: BTreeMap<String, ClassChange>,
    /// Keyed by full signature.
    pub methods: BTreeMap<String, MethodChange>,
    /// Files added, deleted or changed.
    pub files: BTreeSet<String>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.methods.is_empty() && self.files.is_empty()
    }

    pub fn production_classes(&self) -> impl Iterator<Item = &ClassChange> {
        self.classes.values().filter(|c| c.side == Side::Production)
    }

    pub fn test_classes(&self) -> impl Iterator<Item = &ClassChange> {
        self.classes.values().filter(|c| c.side == Side::Test)
    }

    pub fn production_methods(&self) -> impl Iterator<Item = &MethodChange> {
        self.methods.values().filter(|m| m.side == Side::Production)
    }

    pub fn test_methods(&self) -> impl Iterator<Item = &MethodChange> {
        self.methods.values().filter(|m| m.side == Side::Test)
    }

    /// Fold a later change set into this one (pending changes awaiting collection).
    pub fn merge(&mut self, later: &ChangeSet) {
        self.files.extend(later.files.iter().cloned());
        for (name, c) in &later.classes {
            self.classes.insert(name.clone(), c.clone());
        }
        for (sig, m) in &later.methods {
            self.methods.entry(sig.clone()).or_insert_with(|| m.clone());
        }
        let classes = &self.classes;
        self.methods.retain(|_, m| !classes.contains_key(&m.class));
    }
}

/// Superclass links plus the method keys each class declares.
#[derive(Debug, Clone, Default)]
pub struct Hierarchy {
    pub superclass: BTreeMap<String, Option<String>>,
    pub methods: BTreeMap<String, BTreeSet<String>>,
}

impl Hierarchy {
    pub fn of_store(store: &ChecksumStore) -> Hierarchy {
        Hierarchy {
            superclass: store
                .classes
                .iter()
                .map(|(n, e)| (n.clone(), e.superclass.clone()))
                .collect(),
            methods: store
                .methods
                .iter()
                .map(|(c, ms)| (c.clone(), ms.keys().cloned().collect()))
                .collect(),
        }
    }

    fn resolve(&self, name: &str) -> Option<String> {
        if self.superclass.contains_key(name) {
            return Some(name.to_string());
        }
        self.superclass
            .keys()
            .find(|k| k.rsplit('.').next() == Some(name))
            .cloned()
    }

    /// Nearest proper ancestor of `class` declaring `key`.
    pub fn inherited_definition(&self, class: &str, key: &str) -> Option<String> {
        let mut seen = BTreeSet::new();
        let mut cur = self.superclass.get(class).cloned().flatten();
        while let Some(name) = cur {
            let name = self.resolve(&name)?;
            if !seen.insert(name.clone()) {
                return None;
            }
            if self.methods.get(&name).is_some_and(|ms| ms.contains(key)) {
                return Some(name);
            }
            cur = self.superclass.get(&name).cloned().flatten();
        }
        None
    }
}

/// Signatures whose dispatch target may have moved because an override was added or removed.
/// `added` and `deleted` hold `(class, key)` pairs.
pub fn compute_lookup_changes(
    added: &BTreeSet<(String, String)>,
    deleted: &BTreeSet<(String, String)>,
    hierarchy: &Hierarchy,
) -> BTreeSet<(String, String)> {
    added
        .iter()
        .chain(deleted)
        .filter(|(c, k)| !k.starts_with(&format!("{}(", simple_name(c))))
        .filter_map(|(c, k)| {
            hierarchy
                .inherited_definition(c, k)
                .map(|a| (a, k.clone()))
        })
        .collect()
}

fn simple_name(class: &str) -> &str {
    class.rsplit('.').next().unwrap_or(class)
}

/// Class- and method-level changes between two revisions. With no prior store,
/// every class is new.
pub fn compute_changes(old: Option<&ChecksumStore>, new: &ChecksumStore) -> ChangeSet {
    let empty = ChecksumStore::default();
    let old = old.unwrap_or(&empty);
    let mut out = ChangeSet::default();

    for (path, sum) in &new.files {
        if old.files.get(path) != Some(sum) {
            out.files.insert(path.clone());
        }
    }
    for path in old.files.keys() {
        if !new.files.contains_key(path) {
            out.files.insert(path.clone());
        }
    }

    // classes living in a touched file, on either side
    let mut candidates = BTreeSet::new();
    for path in &out.files {
        candidates.extend(old.classes_in(path).map(str::to_string));
        candidates.extend(new.classes_in(path).map(str::to_string));
    }

    let mut am = BTreeSet::new();
    let mut dm = BTreeSet::new();
    let push_method = |out: &mut ChangeSet, class: &str, key: &str, kind, path: &str| {
        let m = MethodChange {
            class: class.to_string(),
            key: key.to_string(),
            kind,
            side: Side::of_path(path),
        };
        out.methods.insert(m.signature(), m);
    };

    for name in &candidates {
        let class_change = |kind, path: &str| ClassChange {
            class: name.clone(),
            kind,
            side: Side::of_path(path),
            path: path.to_string(),
        };
        match (old.classes.get(name), new.classes.get(name)) {
            (None, Some(n)) => {
                out.classes.insert(name.clone(), class_change(ClassChangeKind::Added, &n.path));
            }
            (Some(o), None) => {
                out.classes.insert(name.clone(), class_change(ClassChangeKind::Deleted, &o.path));
            }
            (Some(o), Some(n)) => {
                if o.head_sum != n.head_sum {
                    out.classes
                        .insert(name.clone(), class_change(ClassChangeKind::HeadChanged, &n.path));
                    continue;
                }
                if o.others_sum != n.others_sum {
                    out.classes
                        .insert(name.clone(), class_change(ClassChangeKind::OtherChanged, &n.path));
                    continue;
                }
                let none = BTreeMap::new();
                let om = old.methods.get(name).unwrap_or(&none);
                let nm = new.methods.get(name).unwrap_or(&none);
                for (key, sum) in nm {
                    match om.get(key) {
                        None => {
                            am.insert((name.clone(), key.clone()));
                            push_method(&mut out, name, key, MethodChangeKind::Added, &n.path);
                        }
                        Some(s) if s != sum => {
                            push_method(&mut out, name, key, MethodChangeKind::Changed, &n.path);
                        }
                        _ => {}
                    }
                }
                for key in om.keys() {
                    if !nm.contains_key(key) {
                        dm.insert((name.clone(), key.clone()));
                        push_method(&mut out, name, key, MethodChangeKind::Deleted, &n.path);
                    }
                }
            }
            (None, None) => {}
        }
    }

    let mut lookups = compute_lookup_changes(&am, &dm, &Hierarchy::of_store(old));
    lookups.extend(compute_lookup_changes(&am, &dm, &Hierarchy::of_store(new)));
    for (class, key) in lookups {
        if out.classes.contains_key(&class) {
            continue;
        }
        let path = new
            .classes
            .get(&class)
            .or_else(|| old.classes.get(&class))
            .map(|e| e.path.clone())
            .unwrap_or_default();
        let sig = format!("{class}.{key}");
        if !out.methods.contains_key(&sig) {
            push_method(&mut out, &class, &key, MethodChangeKind::Lookup, &path);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ParsedProject;
    use crate::tree::SourceTree;

    fn store(files: &[(&str, &str)]) -> ChecksumStore {
        let p = ParsedProject::parse(&SourceTree::from_files(files.iter().copied())).unwrap();
        ChecksumStore::from_project(&p)
    }

    const COMPLEX: &str = "class Complex { float re; float im; Complex(float a, float b) { re = a; im = b; } Complex negate() { return new Complex(-re, -im); } float getReal() { return re; } }";

    #[test]
    fn body_edit_is_a_method_change() {
        let old = store(&[("src/Complex.mj", COMPLEX)]);
        let new = store(&[("src/Complex.mj", &COMPLEX.replace("-re, -im", "re, -im"))]);
        let d = compute_changes(Some(&old), &new);
        assert!(d.classes.is_empty());
        let sigs: Vec<&String> = d.methods.keys().collect();
        assert_eq!(sigs, ["Complex.negate()"]);
        assert_eq!(d.methods["Complex.negate()"].kind, MethodChangeKind::Changed);
        assert_eq!(d.methods["Complex.negate()"].side, Side::Production);
    }

    #[test]
    fn no_edit_no_change() {
        let s = store(&[("src/Complex.mj", COMPLEX)]);
        assert!(compute_changes(Some(&s), &s).is_empty());
    }

    #[test]
    fn field_addition_is_class_level() {
        let old = store(&[("src/Complex.mj", COMPLEX)]);
        let new = store(&[("src/Complex.mj", &COMPLEX.replace("float im;", "float im; int n;"))]);
        let d = compute_changes(Some(&old), &new);
        assert_eq!(d.classes["Complex"].kind, ClassChangeKind::OtherChanged);
        assert!(d.methods.is_empty());
    }

    #[test]
    fn comment_edit_is_no_change() {
        let old = store(&[("src/Complex.mj", COMPLEX)]);
        let new = store(&[("src/Complex.mj", &format!("/* doc */\n{}", COMPLEX.replace("{ return re; }", "{\n    // real part\n    return re;\n}")))]);
        assert!(compute_changes(Some(&old), &new).is_empty());
    }

    #[test]
    fn initial_run_marks_every_class() {
        let s = store(&[("src/A.mj", "class A { class N { } }"), ("tests/T.mj", "class T { }")]);
        let d = compute_changes(None, &s);
        let names: Vec<&String> = d.classes.keys().collect();
        assert_eq!(names, ["A", "A.N", "T"]);
        assert!(d.classes.values().all(|c| c.kind == ClassChangeKind::Added));
        assert_eq!(d.classes["T"].side, Side::Test);
    }

    #[test]
    fn added_and_deleted_overrides_emit_lookups() {
        let base = [
            ("src/A.mj", "class A { int f() { return 1; } }"),
            ("src/B.mj", "class B extends A { int g() { return 2; } }"),
        ];
        let with_override = [
            base[0],
            ("src/B.mj", "class B extends A { int g() { return 2; } int f() { return 3; } }"),
        ];
        let d = compute_changes(Some(&store(&base)), &store(&with_override));
        assert_eq!(d.methods["A.f()"].kind, MethodChangeKind::Lookup);
        assert_eq!(d.methods["B.f()"].kind, MethodChangeKind::Added);

        let d = compute_changes(Some(&store(&with_override)), &store(&base));
        assert_eq!(d.methods["A.f()"].kind, MethodChangeKind::Lookup);
        assert_eq!(d.methods["B.f()"].kind, MethodChangeKind::Deleted);
    }

    #[test]
    fn lookup_of_nothing_is_nothing() {
        let h = Hierarchy::default();
        assert!(compute_lookup_changes(&BTreeSet::new(), &BTreeSet::new(), &h).is_empty());
    }

    #[test]
    fn moving_a_class_between_files_compares_sums() {
        let old = store(&[("src/A.mj", "class A { } class B { int f() { return 1; } }")]);
        let new = store(&[("src/A.mj", "class A { }"), ("src/B.mj", "class B { int f() { return 1; } }")]);
        let d = compute_changes(Some(&old), &new);
        assert!(d.classes.is_empty() && d.methods.is_empty());
        assert_eq!(d.files.len(), 2);
    }
}
