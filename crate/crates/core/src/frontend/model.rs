//! Class models: each class split into head (CH), other declarations (OT),
//! methods (M) and nested classes, with per-statement def/use facts.

use super::ast::*;
use super::parser::parse_classes;
use super::printer::stmt_to_string;
use crate::error::{Error, Result};
use crate::fingerprint::checksum_text;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Production sources live under this root; everything under [`TEST_ROOT`] is test code.
pub const SRC_ROOT: &str = "src/";
pub const TEST_ROOT: &str = "tests/";

pub fn is_test_path(path: &str) -> bool {
    path.starts_with(TEST_ROOT)
}

/// Fully qualified method signature, e.g. `Complex.multiply(Complex)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodSig {
    pub class: String,
    pub name: String,
    pub params: Vec<String>,
}

impl MethodSig {
    pub fn new(class: &str, name: &str, params: &[&str]) -> MethodSig {
        MethodSig {
            class: class.to_string(),
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
        }
    }

    /// The class-local part: `name(types)`.
    pub fn key(&self) -> String {
        format!("{}({})", self.name, self.params.join(","))
    }

    pub fn parse(text: &str) -> Option<MethodSig> {
        let open = text.find('(')?;
        if !text.ends_with(')') {
            return None;
        }
        let head = &text[..open];
        let dot = head.rfind('.')?;
        let inner = &text[open + 1..text.len() - 1];
        let params = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::to_string).collect()
        };
        Some(MethodSig {
            class: head[..dot].to_string(),
            name: head[dot + 1..].to_string(),
            params,
        })
    }
}

impl fmt::Display for MethodSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.key())
    }
}

/// Declaring class of a fully qualified signature string.
pub fn declaring_class(signature: &str) -> &str {
    let head = signature.split('(').next().unwrap_or(signature);
    match head.rfind('.') {
        Some(dot) => &head[..dot],
        None => head,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatementId {
    pub class: String,
    pub method: MethodSig,
    pub ordinal: usize,
    pub content_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl,
    Assign,
    Invocation,
    Assertion,
    Return,
    If,
    While,
    For,
    /// Expression statement that is not an invocation, or an instrumentation marker.
    Other,
}

/// Where a call's receiver comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Receiver {
    /// Bare call `m(...)` on the current object/class.
    Implicit,
    /// Receiver chain rooted at a local variable.
    Local(String),
    /// Receiver chain rooted at a field or class name.
    Global(String),
    /// Builtin namespaces: `sys`, `math`, bare `print`.
    Builtin(String),
    /// Receiver is some other expression (e.g. `new A().m()`).
    Temp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub name: String,
    pub arity: usize,
    /// `new C(...)`: `name` is the class name.
    pub is_new: bool,
    pub receiver: Receiver,
    /// Local variables referenced by the argument expressions.
    pub arg_locals: BTreeSet<String>,
    /// Non-local identifiers at the root of argument expressions.
    pub arg_globals: BTreeSet<String>,
}

pub const BUILTIN_NAMESPACES: [&str; 2] = ["sys", "math"];

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub id: StatementId,
    pub kind: StmtKind,
    /// Locals (re)defined by assignment or declaration.
    pub defs: BTreeSet<String>,
    /// Locals read.
    pub uses: BTreeSet<String>,
    /// Locals whose referenced object has a field written (`x.f = ...`).
    pub field_writes: BTreeSet<String>,
    /// Non-local identifiers assigned (fields, statics).
    pub global_writes: BTreeSet<String>,
    /// Non-local identifiers read (fields, class names).
    pub global_reads: BTreeSet<String>,
    pub calls: Vec<CallSite>,
    pub ast: Stmt,
}

impl Statement {
    pub fn is_assertion(&self) -> bool {
        self.kind == StmtKind::Assertion
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodModel {
    pub signature: MethodSig,
    pub decl: MethodDecl,
    pub body: Vec<Statement>,
    /// Local variable declared types (parameters and declarations anywhere in the body).
    pub local_types: BTreeMap<String, TypeName>,
    pub is_test: bool,
    pub is_before: bool,
    pub is_before_class: bool,
    pub is_helper: bool,
    pub is_constructor: bool,
    pub is_static: bool,
    pub expected_exception: Option<String>,
}

impl MethodModel {
    pub fn assertion_count(&self) -> usize {
        self.body.iter().filter(|s| s.is_assertion()).count()
    }

    pub fn has_conditionals(&self) -> bool {
        let mut found = false;
        walk_stmts(&self.decl.body, &mut |s| found |= s.is_conditional());
        found
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassHead {
    pub annotations: Vec<Annotation>,
    pub name: String,
    pub superclass: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub fq_name: String,
    pub path: String,
    pub kind: ClassKind,
    pub head: ClassHead,
    /// Field declarations and enum constants, in source order.
    pub others: Vec<Member>,
    pub methods: Vec<MethodModel>,
    pub nested: Vec<ClassModel>,
    /// The declaration this model was built from.
    pub decl: ClassDecl,
}

impl ClassModel {
    pub fn name(&self) -> &str {
        &self.head.name
    }

    pub fn method(&self, key: &str) -> Option<&MethodModel> {
        self.methods.iter().find(|m| m.signature.key() == key)
    }

    pub fn has_annotation(&self, name: &str) -> bool {
        self.head.annotations.iter().any(|a| a.name == name)
    }

    pub fn is_test_code(&self) -> bool {
        is_test_path(&self.path)
    }

    pub fn fields(&self) -> impl Iterator<Item = &FieldDecl> {
        self.others.iter().filter_map(|m| match m {
            Member::Field(f) => Some(f),
            _ => None,
        })
    }

    /// This class and all nested classes, depth first.
    pub fn flatten(&self) -> Vec<&ClassModel> {
        let mut out = vec![self];
        for n in &self.nested {
            out.extend(n.flatten());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    pub classes: Vec<ClassModel>,
}

impl SourceFile {
    pub fn all_classes(&self) -> Vec<&ClassModel> {
        self.classes.iter().flat_map(|c| c.flatten()).collect()
    }

    pub fn decls(&self) -> Vec<ClassDecl> {
        self.classes.iter().map(|c| c.decl.clone()).collect()
    }

    pub fn is_test(&self) -> bool {
        is_test_path(&self.path)
    }
}

/// Parse a MiniJ file into class models.
pub fn parse_source(text: &str, path: &str) -> Result<SourceFile> {
    let decls = parse_classes(text, path)?;
    let mut classes = Vec::with_capacity(decls.len());
    for decl in &decls {
        classes.push(build_class_model(decl, path, None)?);
    }
    let mut seen = BTreeSet::new();
    for c in classes.iter().flat_map(|c| c.flatten()) {
        if !seen.insert(c.name().to_string()) {
            return Err(Error::DuplicateClass {
                path: path.to_string(),
                name: c.name().to_string(),
            });
        }
    }
    Ok(SourceFile {
        path: path.to_string(),
        text: text.to_string(),
        classes,
    })
}

/// Partition a class declaration into CH / OT / M / nested.
pub fn build_class_model(decl: &ClassDecl, path: &str, outer: Option<&str>) -> Result<ClassModel> {
    let fq_name = match outer {
        Some(o) => format!("{o}.{}", decl.name),
        None => decl.name.clone(),
    };
    let in_tests = is_test_path(path);
    let mut others = Vec::new();
    let mut methods: Vec<MethodModel> = Vec::new();
    let mut nested = Vec::new();
    for member in &decl.members {
        match member {
            Member::Field(_) | Member::EnumConstants(_) => others.push(member.clone()),
            Member::Class(c) => nested.push(build_class_model(c, path, Some(&fq_name))?),
            Member::Method(m) => {
                let model = build_method(&fq_name, m, in_tests);
                let clash = methods.iter().any(|o| {
                    o.decl.name == m.name && o.decl.params.len() == m.params.len()
                });
                if clash {
                    return Err(Error::DuplicateMethod(model.signature.to_string()));
                }
                methods.push(model);
            }
        }
    }
    Ok(ClassModel {
        fq_name,
        path: path.to_string(),
        kind: decl.kind,
        head: ClassHead {
            annotations: decl.annotations.clone(),
            name: decl.name.clone(),
            superclass: decl.superclass.clone(),
        },
        others,
        methods,
        nested,
        decl: decl.clone(),
    })
}

fn build_method(class: &str, decl: &MethodDecl, in_tests: bool) -> MethodModel {
    let signature = MethodSig {
        class: class.to_string(),
        name: decl.name.clone(),
        params: decl.params.iter().map(|p| p.ty.as_str().to_string()).collect(),
    };
    let is_test = decl.has_annotation("Test");
    let is_before = decl.has_annotation("Before");
    let is_before_class = decl.has_annotation("BeforeClass");
    let is_constructor = decl.is_constructor();
    let expected_exception = decl
        .annotation("Test")
        .and_then(|a| a.arg("expected"))
        .map(|v| match v {
            AnnotationValue::Ident(s) | AnnotationValue::Str(s) => s.clone(),
            AnnotationValue::Int(n) => n.to_string(),
        });

    let mut locals: BTreeMap<String, TypeName> = decl
        .params
        .iter()
        .map(|p| (p.name.clone(), p.ty.clone()))
        .collect();
    let mut body = Vec::with_capacity(decl.body.len());
    for (ordinal, stmt) in decl.body.iter().enumerate() {
        // declarations in nested blocks become visible to the facts of this statement
        walk_stmts(std::slice::from_ref(stmt), &mut |s| {
            if let Stmt::VarDecl { ty, name, .. } = s {
                locals.entry(name.clone()).or_insert_with(|| ty.clone());
            }
        });
        let id = StatementId {
            class: class.to_string(),
            method: signature.clone(),
            ordinal,
            content_hash: checksum_text(&stmt_to_string(stmt)),
        };
        body.push(analyze_statement(id, stmt, &locals));
    }
    MethodModel {
        signature,
        decl: decl.clone(),
        body,
        local_types: locals,
        is_test,
        is_before,
        is_before_class,
        is_helper: in_tests && !is_test && !is_before && !is_before_class && !is_constructor,
        is_constructor,
        is_static: decl.is_static,
        expected_exception,
    }
}

fn stmt_kind(stmt: &Stmt) -> StmtKind {
    match stmt {
        Stmt::VarDecl { .. } => StmtKind::VarDecl,
        Stmt::Assign { .. } => StmtKind::Assign,
        Stmt::Expr(Expr::Call { .. } | Expr::New { .. }) => StmtKind::Invocation,
        Stmt::Assert { .. } => StmtKind::Assertion,
        Stmt::Return(_) => StmtKind::Return,
        Stmt::If { .. } => StmtKind::If,
        Stmt::While { .. } => StmtKind::While,
        Stmt::For { .. } => StmtKind::For,
        Stmt::Expr(_) | Stmt::Trace { .. } => StmtKind::Other,
    }
}

/// Derive def/use/call facts for one top-level statement (including nested blocks).
pub fn analyze_statement(
    id: StatementId,
    stmt: &Stmt,
    locals: &BTreeMap<String, TypeName>,
) -> Statement {
    let mut facts = Statement {
        id,
        kind: stmt_kind(stmt),
        defs: BTreeSet::new(),
        uses: BTreeSet::new(),
        field_writes: BTreeSet::new(),
        global_writes: BTreeSet::new(),
        global_reads: BTreeSet::new(),
        calls: Vec::new(),
        ast: stmt.clone(),
    };
    let is_local = |name: &str| locals.contains_key(name);
    walk_stmts(std::slice::from_ref(stmt), &mut |s| {
        match s {
            Stmt::VarDecl { name, .. } => {
                facts.defs.insert(name.clone());
            }
            Stmt::Assign { target, op, .. } => match target {
                Expr::Ident(name) if is_local(name) => {
                    facts.defs.insert(name.clone());
                    if *op != AssignOp::Set {
                        facts.uses.insert(name.clone());
                    }
                }
                Expr::Ident(name) => {
                    facts.global_writes.insert(name.clone());
                }
                Expr::Field { target: obj, .. } => match obj.root_ident() {
                    Some(root) if is_local(root) => {
                        facts.field_writes.insert(root.to_string());
                    }
                    Some(root) => {
                        facts.global_writes.insert(root.to_string());
                    }
                    None => {
                        if matches!(obj.as_ref(), Expr::This) {
                            facts.global_writes.insert("this".to_string());
                        }
                    }
                },
                _ => {}
            },
            _ => {}
        }
        for e in stmt_exprs(s) {
            // a plain assignment target is a def, not a use
            let skip_target = matches!(
                s,
                Stmt::Assign { target: Expr::Ident(_), op: AssignOp::Set, .. }
            ) && std::ptr::eq(e, assign_target(s).unwrap());
            if skip_target {
                continue;
            }
            e.walk(&mut |sub| match sub {
                Expr::Ident(name) => {
                    if is_local(name) {
                        facts.uses.insert(name.clone());
                    } else {
                        facts.global_reads.insert(name.clone());
                    }
                }
                Expr::Call {
                    receiver,
                    name,
                    args,
                } => facts.calls.push(call_site(receiver.as_deref(), name, args, false, &is_local)),
                Expr::New { class, args } => {
                    facts.calls.push(call_site(None, class, args, true, &is_local))
                }
                _ => {}
            });
        }
    });
    facts
}

fn assign_target(s: &Stmt) -> Option<&Expr> {
    match s {
        Stmt::Assign { target, .. } => Some(target),
        _ => None,
    }
}

fn call_site(
    receiver: Option<&Expr>,
    name: &str,
    args: &[Expr],
    is_new: bool,
    is_local: &dyn Fn(&str) -> bool,
) -> CallSite {
    let receiver = if is_new {
        Receiver::Temp
    } else {
        match receiver {
            None if name == "print" => Receiver::Builtin("print".to_string()),
            None => Receiver::Implicit,
            Some(Expr::This) => Receiver::Implicit,
            Some(r) => match r.root_ident() {
                Some(root) if is_local(root) => Receiver::Local(root.to_string()),
                Some(root) if BUILTIN_NAMESPACES.contains(&root) && matches!(r, Expr::Ident(_)) => {
                    Receiver::Builtin(root.to_string())
                }
                Some(root) => Receiver::Global(root.to_string()),
                None => Receiver::Temp,
            },
        }
    };
    let mut arg_locals = BTreeSet::new();
    let mut arg_globals = BTreeSet::new();
    for a in args {
        a.walk(&mut |sub| {
            if let Expr::Ident(n) = sub {
                if is_local(n) {
                    arg_locals.insert(n.clone());
                } else {
                    arg_globals.insert(n.clone());
                }
            }
        });
        if matches!(a, Expr::This) {
            arg_globals.insert("this".to_string());
        }
    }
    CallSite {
        name: name.to_string(),
        arity: args.len(),
        is_new,
        receiver,
        arg_locals,
        arg_globals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_display_and_parse() {
        let sig = MethodSig::new("Outer.Inner", "f", &["int", "Complex"]);
        assert_eq!(sig.to_string(), "Outer.Inner.f(int,Complex)");
        assert_eq!(MethodSig::parse(&sig.to_string()), Some(sig));
        assert_eq!(declaring_class("Outer.Inner.f(int)"), "Outer.Inner");
        assert_eq!(declaring_class("Complex.<clinit>()"), "Complex");
    }

    #[test]
    fn partition_counts_constructor_as_method() {
        let f = parse_source(
            "class P { int a; int b; P() { a = 1; } int f() { return a; } int g() { return b; } void h() { } }",
            "src/P.mj",
        )
        .unwrap();
        let c = &f.classes[0];
        assert_eq!(c.others.len(), 2);
        assert_eq!(c.methods.len(), 4);
        assert!(c.methods[0].is_constructor);
    }

    #[test]
    fn empty_class_has_head_only() {
        let f = parse_source("class E { }", "src/E.mj").unwrap();
        let c = &f.classes[0];
        assert!(c.others.is_empty() && c.methods.is_empty() && c.nested.is_empty());
    }

    #[test]
    fn empty_file_has_no_classes() {
        assert!(parse_source("", "src/x.mj").unwrap().classes.is_empty());
        assert!(parse_source("// nothing\n", "src/x.mj").unwrap().classes.is_empty());
    }

    #[test]
    fn nested_classes_get_qualified_names() {
        let f = parse_source("class A { class B { void f() { } } }", "src/A.mj").unwrap();
        assert_eq!(f.all_classes()[1].fq_name, "A.B");
        assert_eq!(f.all_classes()[1].methods[0].signature.to_string(), "A.B.f()");
    }

    #[test]
    fn duplicate_class_in_file_is_rejected() {
        let err = parse_source("class A { } class A { }", "src/A.mj").unwrap_err();
        assert!(matches!(err, Error::DuplicateClass { .. }));
    }

    #[test]
    fn undeclared_superclass_parses() {
        let f = parse_source("class A extends B { }", "src/A.mj").unwrap();
        assert_eq!(f.classes[0].head.superclass.as_deref(), Some("B"));
    }

    #[test]
    fn statement_facts() {
        let f = parse_source(
            "class T { Complex c; @Test void t() { Complex x = new Complex(1.0, 2.0); Complex z = x.negate(); x.re = 3.0; c = z; assertNear(-1.0, z.getReal(), 0.1); } }",
            "tests/T.mj",
        )
        .unwrap();
        let m = &f.classes[0].methods[0];
        assert_eq!(m.body[1].defs, BTreeSet::from(["z".to_string()]));
        assert_eq!(m.body[1].uses, BTreeSet::from(["x".to_string()]));
        assert_eq!(m.body[1].calls[0].receiver, Receiver::Local("x".into()));
        assert_eq!(m.body[2].field_writes, BTreeSet::from(["x".to_string()]));
        assert_eq!(m.body[3].global_writes, BTreeSet::from(["c".to_string()]));
        assert!(m.body[4].is_assertion());
        assert_eq!(m.body[4].uses, BTreeSet::from(["z".to_string()]));
        assert!(!m.is_helper && m.body.len() == 5);
    }

    #[test]
    fn content_hash_tracks_statement_text() {
        let a = parse_source("class T { void t() { int x = 1;   } }", "src/T.mj").unwrap();
        let b = parse_source("class T { void t() {\n  int x = 1; // c\n } }", "src/T.mj").unwrap();
        let c = parse_source("class T { void t() { int y = 1; } }", "src/T.mj").unwrap();
        let h = |f: &SourceFile| f.classes[0].methods[0].body[0].id.content_hash.clone();
        assert_eq!(h(&a), h(&b));
        assert_ne!(h(&a), h(&c));
    }
}
