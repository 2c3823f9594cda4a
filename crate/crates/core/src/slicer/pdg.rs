//! Intra-procedural data-dependence graph over the top-level statements of a test method.
//!
//! Reaching definitions come in two strengths. A declaration or assignment of
//! `v` is a strong definition and kills everything before it. An invocation
//! that receives `v` (as receiver or argument), or a field store through `v`,
//! is a weak definition: the object behind `v` may have changed, but the
//! earlier definition still reaches. Weak definitions propagate through alias
//! groups: `y = f(x)` with reference-typed `y` and `x` joins their groups.

use crate::frontend::model::{MethodModel, Receiver, Statement};
use crate::frontend::EffectSummary;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Witness {
    /// `to` reads the variable that `from` (strongly) defines.
    Def(String),
    /// `from` may mutate the object `to` reads through this variable.
    Alias(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pdg {
    pub nodes: usize,
    /// `(from, to)` with `from < to`, each with the witnesses that justify it.
    pub edges: BTreeMap<(usize, usize), BTreeSet<Witness>>,
}

impl Pdg {
    pub fn predecessors(&self, to: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.keys().filter(move |(_, t)| *t == to).map(|(f, _)| *f)
    }

    /// Backward transitive closure from `criterion`, in statement order.
    pub fn backward_closure(&self, criterion: usize) -> Vec<usize> {
        let mut seen = BTreeSet::from([criterion]);
        let mut work = vec![criterion];
        while let Some(n) = work.pop() {
            for p in self.predecessors(n) {
                if seen.insert(p) {
                    work.push(p);
                }
            }
        }
        seen.into_iter().collect()
    }
}

#[derive(Default)]
struct Aliases {
    parent: BTreeMap<String, String>,
}

impl Aliases {
    fn find(&mut self, v: &str) -> String {
        let p = match self.parent.get(v) {
            Some(p) if p != v => p.clone(),
            _ => return v.to_string(),
        };
        let root = self.find(&p);
        self.parent.insert(v.to_string(), root.clone());
        root
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }

    fn group(&mut self, v: &str, vars: &BTreeSet<String>) -> Vec<String> {
        let root = self.find(v);
        let mut out: Vec<String> = vars.iter().filter(|w| self.find(w) == root).cloned().collect();
        if !out.iter().any(|w| w == v) {
            out.push(v.to_string());
        }
        out
    }
}

#[derive(Default, Clone)]
struct Reaching {
    strong: Option<usize>,
    weak: Vec<usize>,
}

/// Locals whose object `stmt` may mutate.
pub fn mutated_locals(stmt: &Statement, effects: &EffectSummary) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = stmt.field_writes.clone();
    for call in &stmt.calls {
        if matches!(call.receiver, Receiver::Builtin(_)) {
            continue;
        }
        // assertions only observe, unless they call something that may write state
        if stmt.is_assertion() && !effects.call_may_mutate(call) {
            continue;
        }
        if let Receiver::Local(r) = &call.receiver {
            out.insert(r.clone());
        }
        out.extend(call.arg_locals.iter().cloned());
    }
    out
}

pub fn build_pdg(method: &MethodModel, effects: &EffectSummary) -> Pdg {
    let is_reference = |v: &str| method.local_types.get(v).is_some_and(|t| !t.is_value_type());
    let mut pdg = Pdg {
        nodes: method.body.len(),
        edges: BTreeMap::new(),
    };
    let mut aliases = Aliases::default();
    let mut reaching: BTreeMap<String, Reaching> = BTreeMap::new();
    let mut vars: BTreeSet<String> = BTreeSet::new();

    for (i, s) in method.body.iter().enumerate() {
        for v in &s.uses {
            if let Some(r) = reaching.get(v) {
                if let Some(d) = r.strong {
                    pdg.edges.entry((d, i)).or_default().insert(Witness::Def(v.clone()));
                }
                for &w in &r.weak {
                    pdg.edges.entry((w, i)).or_default().insert(Witness::Alias(v.clone()));
                }
            }
        }
        for d in &s.defs {
            vars.insert(d.clone());
            reaching.insert(
                d.clone(),
                Reaching {
                    strong: Some(i),
                    weak: Vec::new(),
                },
            );
            if is_reference(d) {
                for u in s.uses.iter().filter(|u| is_reference(u)) {
                    aliases.union(d, u);
                }
            }
        }
        for m in mutated_locals(s, effects) {
            if !is_reference(&m) {
                continue;
            }
            for w in aliases.group(&m, &vars) {
                let r = reaching.entry(w).or_default();
                if r.strong != Some(i) {
                    r.weak.push(i);
                }
            }
        }
    }
    pdg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ParsedProject;
    use crate::tree::SourceTree;

    fn pdg_of(test_body: &str) -> Pdg {
        let project = ParsedProject::parse(&SourceTree::from_files([
            (
                "src/Box.mj",
                "class Box { int v; Box(int x) { v = x; } int get() { return v; } void put(int x) { v = x; } }",
            ),
            (
                "src/Sink.mj",
                "class Sink { Box held; void consume(Box b) { b.put(0); } Sink(Box b) { held = b; } }",
            ),
            ("tests/T.mj", &format!("class T {{ @Test void t() {{ {test_body} }} }}")),
        ]))
        .unwrap();
        let effects = EffectSummary::compute(&project);
        build_pdg(project.method("T", "t()").unwrap(), &effects)
    }

    fn edges(p: &Pdg) -> Vec<(usize, usize)> {
        p.edges.keys().copied().collect()
    }

    #[test]
    fn single_assertion_has_no_edges() {
        let p = pdg_of("assertTrue(true);");
        assert_eq!(p.nodes, 1);
        assert!(p.edges.is_empty());
    }

    #[test]
    fn mutation_through_argument_reaches_later_use() {
        let p = pdg_of("Box x = new Box(1); Sink m = new Sink(new Box(2)); m.consume(x); assertEq(x.get(), 0);");
        assert!(p.edges.contains_key(&(0, 3)));
        assert!(p.edges.contains_key(&(2, 3)));
        assert!(p.edges[&(2, 3)].contains(&Witness::Alias("x".into())));
    }

    #[test]
    fn constructor_argument_joins_alias_groups() {
        let p = pdg_of("Box x = new Box(1); Sink s = new Sink(x); s.consume(new Box(3)); x.put(5); assertEq(s.held.get(), 5);");
        // x.put(5) mutates x, which s holds
        assert!(p.edges.contains_key(&(3, 4)));
        assert!(p.edges.contains_key(&(2, 4)));
    }

    #[test]
    fn strong_redefinition_kills() {
        let p = pdg_of("int a = 1; a = 2; assertEq(a, 2);");
        assert_eq!(edges(&p), vec![(1, 2)]);
    }

    #[test]
    fn pure_assertions_do_not_mutate() {
        let p = pdg_of("Box x = new Box(1); assertEq(x.get(), 1); assertEq(x.get(), 1);");
        assert_eq!(edges(&p), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn primitives_are_never_mutated() {
        let p = pdg_of("int a = 1; Sink s = new Sink(new Box(a)); assertEq(a, 1);");
        assert_eq!(edges(&p), vec![(0, 1), (0, 2)]);
    }
}
