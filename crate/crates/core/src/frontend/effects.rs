//! Name-based side-effect summary over a whole project.
//!
//! Calls are resolved by `(name, arity)` across every class, which
//! over-approximates dynamic dispatch. A call is considered mutating if any
//! candidate callee writes a field (directly or through further calls) or if
//! no candidate exists at all.

use super::model::{CallSite, ClassModel, MethodModel, Receiver};
use super::project::ParsedProject;
use crate::fingerprint::checksum_text;
use std::collections::BTreeSet;

/// Builtin list methods on `List` values; `true` when the method mutates.
const LIST_BUILTINS: [(&str, usize, bool); 4] = [
    ("push", 1, true),
    ("put", 2, true),
    ("get", 1, false),
    ("size", 0, false),
];
const ENUM_BUILTINS: [(&str, usize); 2] = [("ordinal", 0), ("name", 0)];

type Key = (String, usize);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EffectSummary {
    known: BTreeSet<Key>,
    mutating: BTreeSet<Key>,
    static_writing: BTreeSet<Key>,
    known_classes: BTreeSet<String>,
    mutating_ctors: BTreeSet<Key>,
    static_writing_ctors: BTreeSet<Key>,
}

struct MethodFacts {
    key: Key,
    is_ctor: bool,
    writes_fields: bool,
    writes_statics: bool,
    calls: Vec<CallSite>,
}

impl EffectSummary {
    pub fn compute(project: &ParsedProject) -> EffectSummary {
        let mut summary = EffectSummary::default();
        let mut facts = Vec::new();
        for class in project.classes() {
            summary.known_classes.insert(class.name().to_string());
            let (instance_fields, static_fields) = field_names(project, class);
            for m in &class.methods {
                let key = (m.decl.name.clone(), m.decl.params.len());
                if !m.is_constructor {
                    summary.known.insert(key.clone());
                }
                facts.push(method_facts(m, key, &instance_fields, &static_fields, project));
            }
        }
        for f in &facts {
            let (set, static_set) = if f.is_ctor {
                (&mut summary.mutating_ctors, &mut summary.static_writing_ctors)
            } else {
                (&mut summary.mutating, &mut summary.static_writing)
            };
            if f.writes_fields {
                set.insert(f.key.clone());
            }
            if f.writes_statics {
                static_set.insert(f.key.clone());
            }
        }
        loop {
            let mut changed = false;
            for f in &facts {
                let mutates = f.calls.iter().any(|c| summary.call_may_mutate(c));
                let statics = f.calls.iter().any(|c| summary.call_may_write_statics(c));
                let (set, static_set) = if f.is_ctor {
                    (&mut summary.mutating_ctors, &mut summary.static_writing_ctors)
                } else {
                    (&mut summary.mutating, &mut summary.static_writing)
                };
                if mutates && set.insert(f.key.clone()) {
                    changed = true;
                }
                if statics && static_set.insert(f.key.clone()) {
                    changed = true;
                }
            }
            if !changed {
                return summary;
            }
        }
    }

    /// May this call change the state of its receiver or arguments?
    pub fn call_may_mutate(&self, call: &CallSite) -> bool {
        if matches!(call.receiver, Receiver::Builtin(_)) {
            return false;
        }
        let key = (call.name.clone(), call.arity);
        if call.is_new {
            if !self.known_classes.contains(&call.name) {
                return true;
            }
            return self.mutating_ctors.contains(&key);
        }
        if self.known.contains(&key) {
            return self.mutating.contains(&key)
                || LIST_BUILTINS
                    .iter()
                    .any(|(n, a, m)| *m && *n == call.name && *a == call.arity);
        }
        if let Some((_, _, m)) = LIST_BUILTINS
            .iter()
            .find(|(n, a, _)| *n == call.name && *a == call.arity)
        {
            return *m;
        }
        !ENUM_BUILTINS
            .iter()
            .any(|(n, a)| *n == call.name && *a == call.arity)
    }

    /// May this call (transitively) assign a static field?
    pub fn call_may_write_statics(&self, call: &CallSite) -> bool {
        if matches!(call.receiver, Receiver::Builtin(_)) {
            return false;
        }
        let key = (call.name.clone(), call.arity);
        if call.is_new {
            return !self.known_classes.contains(&call.name)
                || self.static_writing_ctors.contains(&key);
        }
        if self.known.contains(&key) {
            return self.static_writing.contains(&key);
        }
        let builtin = LIST_BUILTINS
            .iter()
            .any(|(n, a, _)| *n == call.name && *a == call.arity)
            || ENUM_BUILTINS
                .iter()
                .any(|(n, a)| *n == call.name && *a == call.arity);
        !builtin
    }

    /// Stable digest of the summary; slices computed under a different digest are stale.
    pub fn digest(&self) -> String {
        let mut text = String::new();
        for (name, set) in [
            ("m", &self.mutating),
            ("s", &self.static_writing),
            ("c", &self.mutating_ctors),
            ("cs", &self.static_writing_ctors),
        ] {
            for (n, a) in set {
                text.push_str(&format!("{name}\t{n}\t{a}\n"));
            }
        }
        checksum_text(&text)
    }
}

fn field_names(project: &ParsedProject, class: &ClassModel) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut instance = BTreeSet::new();
    let mut statics = BTreeSet::new();
    let mut chain = vec![class];
    chain.extend(project.ancestors(&class.fq_name));
    for c in chain {
        for f in c.fields() {
            if f.is_static {
                statics.insert(f.name.clone());
            } else {
                instance.insert(f.name.clone());
            }
        }
        for m in &c.others {
            if let super::ast::Member::EnumConstants(names) = m {
                statics.extend(names.iter().cloned());
            }
        }
    }
    (instance, statics)
}

fn method_facts(
    m: &MethodModel,
    key: Key,
    instance_fields: &BTreeSet<String>,
    static_fields: &BTreeSet<String>,
    project: &ParsedProject,
) -> MethodFacts {
    let mut writes_fields = false;
    let mut writes_statics = false;
    let mut calls = Vec::new();
    for s in &m.body {
        if !s.field_writes.is_empty() {
            writes_fields = true;
        }
        for w in &s.global_writes {
            let is_static = static_fields.contains(w) || project.class(w).is_some();
            if is_static {
                writes_statics = true;
                writes_fields = true;
            } else if !(m.is_constructor && (w == "this" || instance_fields.contains(w))) {
                writes_fields = true;
            }
        }
        calls.extend(s.calls.iter().cloned());
    }
    MethodFacts {
        key,
        is_ctor: m.is_constructor,
        writes_fields,
        writes_statics,
        calls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::SourceTree;

    fn project(src: &str) -> ParsedProject {
        ParsedProject::parse(&SourceTree::from_files([("src/A.mj", src)])).unwrap()
    }

    fn call(name: &str, arity: usize) -> CallSite {
        CallSite {
            name: name.to_string(),
            arity,
            is_new: false,
            receiver: Receiver::Local("x".into()),
            arg_locals: BTreeSet::new(),
            arg_globals: BTreeSet::new(),
        }
    }

    #[test]
    fn getters_are_pure_setters_mutate() {
        let p = project(
            "class A { int v; A(int x) { v = x; } int get() { return v; } void set(int x) { v = x; } void viaSet() { set(1); } }",
        );
        let e = EffectSummary::compute(&p);
        assert!(!e.call_may_mutate(&call("get", 0)));
        assert!(e.call_may_mutate(&call("set", 1)));
        assert!(e.call_may_mutate(&call("viaSet", 0)));
        let mut ctor = call("A", 1);
        ctor.is_new = true;
        assert!(!e.call_may_mutate(&ctor));
    }

    #[test]
    fn unknown_calls_are_conservative() {
        let p = project("class A { }");
        let e = EffectSummary::compute(&p);
        assert!(e.call_may_mutate(&call("mystery", 2)));
        assert!(!e.call_may_mutate(&call("size", 0)));
        assert!(e.call_may_mutate(&call("push", 1)));
    }

    #[test]
    fn static_writes_are_tracked() {
        let p = project(
            "class C { static int n = 0; static void bump() { n = n + 1; } int peek() { return n; } void viaBump() { C.bump(); } }",
        );
        let e = EffectSummary::compute(&p);
        assert!(e.call_may_write_statics(&call("bump", 0)));
        assert!(e.call_may_write_statics(&call("viaBump", 0)));
        assert!(!e.call_may_write_statics(&call("peek", 0)));
    }
}
