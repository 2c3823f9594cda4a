//! Static test inventory: which classes hold tests and which features force
//! coarser dependency tracking.

use super::ast::walk_stmts;
use super::effects::EffectSummary;
use super::model::{ClassModel, MethodModel, MethodSig, Receiver, Statement};
use super::project::ParsedProject;
use crate::error::Result;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TestFeatures {
    pub parameterized: bool,
    pub uses_inheritance: bool,
    pub calls_other_tests: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestMethodInfo {
    pub signature: MethodSig,
    pub expects_exception: Option<String>,
    pub has_conditionals: bool,
    pub assertion_count: usize,
    /// Calls outside the sliceable subset: `sys.sleep`, or side effects on
    /// fields and statics that a per-assertion slice could not reproduce.
    pub out_of_scope_call: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestClassInfo {
    pub fq_name: String,
    pub path: String,
    pub features: TestFeatures,
    /// `@Test` methods declared by this class, in source order.
    pub test_methods: Vec<TestMethodInfo>,
    /// `@Test` methods inherited from superclasses and executed with this class.
    pub inherited_tests: Vec<MethodSig>,
}

impl TestClassInfo {
    pub fn method(&self, key: &str) -> Option<&TestMethodInfo> {
        self.test_methods.iter().find(|m| m.signature.key() == key)
    }

    pub fn assertion_count(&self) -> usize {
        self.test_methods.iter().map(|m| m.assertion_count).sum()
    }

    /// Whether the class as a whole must be traced and selected.
    pub fn is_class_level(&self) -> bool {
        let f = self.features;
        f.parameterized || f.uses_inheritance || f.calls_other_tests
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestInventory {
    pub classes: Vec<TestClassInfo>,
}

impl TestInventory {
    pub fn class(&self, name: &str) -> Option<&TestClassInfo> {
        self.classes.iter().find(|c| c.fq_name == name)
    }

    pub fn test_count(&self) -> usize {
        self.classes.iter().map(|c| c.test_methods.len()).sum()
    }

    pub fn assertion_count(&self) -> usize {
        self.classes.iter().map(|c| c.assertion_count()).sum()
    }

    pub fn contains_test(&self, class: &str, key: &str) -> bool {
        self.class(class).is_some_and(|c| c.method(key).is_some())
    }
}

fn declares_tests(class: &ClassModel) -> bool {
    class.methods.iter().any(|m| m.is_test)
}

/// A class declaring or inheriting at least one `@Test` method.
pub fn is_test_class(project: &ParsedProject, class: &ClassModel) -> bool {
    declares_tests(class) || project.ancestors(&class.fq_name).iter().any(|a| declares_tests(a))
}

pub fn enumerate_tests(project: &ParsedProject) -> Result<TestInventory> {
    project.link()?;
    let effects = EffectSummary::compute(project);
    let test_classes: Vec<&ClassModel> = project
        .classes()
        .into_iter()
        .filter(|c| is_test_class(project, c))
        .collect();
    let extended: BTreeSet<String> = test_classes
        .iter()
        .filter_map(|c| project.superclass(&c.fq_name))
        .filter(|s| s.is_test_code())
        .map(|s| s.fq_name.clone())
        .collect();

    let mut classes = Vec::new();
    for class in &test_classes {
        let ancestors = project.ancestors(&class.fq_name);
        let inherited_tests: Vec<MethodSig> = ancestors
            .iter()
            .rev()
            .flat_map(|a| a.methods.iter().filter(|m| m.is_test))
            .filter(|m| class.method(&m.signature.key()).is_none())
            .map(|m| m.signature.clone())
            .collect();
        let test_names: BTreeSet<&str> = class
            .methods
            .iter()
            .chain(ancestors.iter().flat_map(|a| a.methods.iter()))
            .filter(|m| m.is_test)
            .map(|m| m.decl.name.as_str())
            .collect();
        let calls_other_tests = class
            .methods
            .iter()
            .filter(|m| m.is_test)
            .any(|m| calls_any_of(m, &test_names));
        let uses_inheritance = project
            .superclass(&class.fq_name)
            .is_some_and(|s| s.is_test_code())
            || extended.contains(&class.fq_name);
        let features = TestFeatures {
            parameterized: class.has_annotation("Parameterized"),
            uses_inheritance,
            calls_other_tests,
        };
        let test_methods = class
            .methods
            .iter()
            .filter(|m| m.is_test)
            .map(|m| TestMethodInfo {
                signature: m.signature.clone(),
                expects_exception: m.expected_exception.clone(),
                has_conditionals: m.has_conditionals(),
                assertion_count: m.assertion_count(),
                out_of_scope_call: has_out_of_scope_call(m, &effects),
            })
            .collect();
        classes.push(TestClassInfo {
            fq_name: class.fq_name.clone(),
            path: class.path.clone(),
            features,
            test_methods,
            inherited_tests,
        });
    }
    classes.sort_by(|a, b| a.fq_name.cmp(&b.fq_name));
    Ok(TestInventory { classes })
}

fn calls_any_of(m: &MethodModel, names: &BTreeSet<&str>) -> bool {
    m.body.iter().flat_map(|s| &s.calls).any(|c| {
        !c.is_new && c.arity == 0 && c.receiver == Receiver::Implicit && names.contains(c.name.as_str())
    })
}

/// Statements whose effects reach beyond the method's locals, or builtin
/// calls that no slice could carry.
pub fn has_out_of_scope_call(m: &MethodModel, effects: &EffectSummary) -> bool {
    m.body.iter().any(|s| statement_out_of_scope(s, effects))
}

fn statement_out_of_scope(s: &Statement, effects: &EffectSummary) -> bool {
    if !s.global_writes.is_empty() {
        return true;
    }
    s.calls.iter().any(|c| {
        if c.receiver == Receiver::Builtin("sys".to_string()) {
            return c.name == "sleep";
        }
        if effects.call_may_write_statics(c) {
            return true;
        }
        let touches_globals = matches!(c.receiver, Receiver::Global(_) | Receiver::Implicit)
            || !c.arg_globals.is_empty();
        touches_globals && effects.call_may_mutate(c)
    })
}

/// Inventory soundness helper: does a recursive walk find a conditional?
pub fn contains_conditional(m: &MethodModel) -> bool {
    let mut found = false;
    walk_stmts(&m.decl.body, &mut |s| found |= s.is_conditional());
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tree::SourceTree;

    fn inventory(files: &[(&str, &str)]) -> Result<TestInventory> {
        let project = ParsedProject::parse(&SourceTree::from_files(files.iter().copied()))?;
        enumerate_tests(&project)
    }

    #[test]
    fn inheritance_flags_both_ends() {
        let inv = inventory(&[
            ("tests/Base.mj", "class Base { @Test void a() { assertTrue(true); } }"),
            ("tests/Sub.mj", "class Sub extends Base { @Test void b() { assertTrue(true); } }"),
            ("tests/Other.mj", "class Other { @Test void c() { assertTrue(true); } }"),
        ])
        .unwrap();
        assert!(inv.class("Base").unwrap().features.uses_inheritance);
        assert!(inv.class("Sub").unwrap().features.uses_inheritance);
        assert!(!inv.class("Other").unwrap().features.uses_inheritance);
        assert_eq!(inv.class("Sub").unwrap().inherited_tests[0].to_string(), "Base.a()");
    }

    #[test]
    fn test_calling_test_is_detected() {
        let inv = inventory(&[(
            "tests/T.mj",
            "class T { @Test void a() { assertTrue(true); } @Test void b() { a(); assertTrue(true); } }",
        )])
        .unwrap();
        assert!(inv.class("T").unwrap().features.calls_other_tests);
    }

    #[test]
    fn expected_exception_and_conditionals() {
        let inv = inventory(&[(
            "tests/T.mj",
            "class T { @Test(expected=DivByZero) void a() { int x = 1 / 0; } @Test void b() { for (int i = 0; i < 2; i += 1) { assertTrue(i < 2); } } }",
        )])
        .unwrap();
        let t = inv.class("T").unwrap();
        assert_eq!(t.test_methods[0].expects_exception.as_deref(), Some("DivByZero"));
        assert!(!t.test_methods[0].has_conditionals);
        assert!(t.test_methods[1].has_conditionals);
        assert_eq!(t.test_methods[1].assertion_count, 0);
    }

    #[test]
    fn sleep_and_field_writes_are_out_of_scope() {
        let inv = inventory(&[(
            "tests/T.mj",
            "class T { int f; @Test void a() { sys.sleep(10); assertTrue(true); } @Test void b() { f = 2; assertEq(f, 2); } @Test void c() { int x = f; assertEq(x, 0); } }",
        )])
        .unwrap();
        let t = inv.class("T").unwrap();
        let flags: Vec<bool> = t.test_methods.iter().map(|m| m.out_of_scope_call).collect();
        assert_eq!(flags, vec![true, true, false]);
    }

    #[test]
    fn unresolved_superclass_is_an_error() {
        let err = inventory(&[("tests/T.mj", "class T extends Missing { @Test void a() { } }")]).unwrap_err();
        assert!(matches!(err, Error::UnresolvedSuperclass { .. }));
    }
}
