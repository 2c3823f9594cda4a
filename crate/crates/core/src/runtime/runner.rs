use super::interp::{Frame, Interp, Program, Raise, DEFAULT_STEP_LIMIT, R};
use super::trace::{DependencyDb, EntityId, TraceSink};
use super::value::Value;
use crate::error::{Error, Result};
use crate::frontend::ast::{AnnotationValue, MethodDecl, Stmt};
use crate::frontend::ParsedProject;
use crate::tree::{write_atomic, SourceTree};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

/// Class annotation carrying the class-level scope marker, e.g. `@TraceClass(id="C=P")`.
pub const TRACE_CLASS: &str = "TraceClass";

const STACK_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail(String),
    /// Exception name and detail.
    Error(String),
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass)
    }

    fn to_cell(&self) -> String {
        let clean = |s: &str| s.replace(['\t', '\n'], " ");
        match self {
            Outcome::Pass => "pass".into(),
            Outcome::Fail(m) => format!("fail:{}", clean(m)),
            Outcome::Error(m) => format!("error:{}", clean(m)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestOutcome {
    pub class: String,
    pub method: String,
    /// Parameter row for parameterized classes.
    pub row: Option<usize>,
    pub outcome: Outcome,
    pub millis: u128,
}

impl TestOutcome {
    pub fn entity(&self) -> String {
        let base = EntityId::Method(self.class.clone(), self.method.clone()).to_string();
        match self.row {
            Some(r) => format!("{base}[{r}]"),
            None => base,
        }
    }

    /// Method key with any generated `__slice<k>` suffix removed.
    pub fn original_method(&self) -> String {
        original_method_key(&self.method)
    }
}

/// `testExp__slice3()` → `testExp()`.
pub fn original_method_key(key: &str) -> String {
    let (name, rest) = key.split_at(key.find('(').unwrap_or(key.len()));
    match name.rfind("__slice") {
        Some(i) if name[i + 7..].chars().all(|c| c.is_ascii_digit()) && i + 7 < name.len() => {
            format!("{}{rest}", &name[..i])
        }
        _ => key.to_string(),
    }
}

/// One evaluated top-level assertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionEvent {
    pub class: String,
    pub method: String,
    pub row: Option<usize>,
    pub ordinal: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestReport {
    pub outcomes: Vec<TestOutcome>,
    pub assertions: Vec<AssertionEvent>,
    pub output: Vec<String>,
}

impl TestReport {
    /// Distinct (class, original method) pairs executed.
    pub fn tests_run(&self) -> usize {
        self.outcomes
            .iter()
            .map(|o| (o.class.as_str(), o.original_method()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn assertions_evaluated(&self) -> usize {
        self.assertions.len()
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o.outcome, Outcome::Fail(_))).count()
    }

    pub fn errors(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o.outcome, Outcome::Error(_))).count()
    }

    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.outcome.is_pass())
    }

    pub fn outcome_of(&self, class: &str, method: &str) -> Option<&Outcome> {
        self.outcomes
            .iter()
            .find(|o| o.class == class && o.method == method)
            .map(|o| &o.outcome)
    }

    pub fn to_tsv(&self) -> String {
        self.outcomes
            .iter()
            .map(|o| format!("{}\t{}\t{}\n", o.entity(), o.outcome.to_cell(), o.millis))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_tsv())
    }
}

/// Which test entities to run; `None` runs everything.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub filter: Option<BTreeSet<EntityId>>,
    pub step_limit: Option<u64>,
}

impl RunOptions {
    fn wants_class(&self, class: &str) -> bool {
        self.filter
            .as_ref()
            .is_none_or(|f| f.iter().any(|e| e.class() == class))
    }

    fn wants_method(&self, class: &str, key: &str) -> bool {
        self.filter.as_ref().is_none_or(|f| {
            f.iter()
                .any(|e| e.class() == class && e.method_key().is_none_or(|k| k == key))
        })
    }
}

/// Run the suite of `project`, returning the report and the folded trace.
pub fn run_project(project: &ParsedProject, opts: &RunOptions) -> Result<(TestReport, Result<DependencyDb>)> {
    project.link()?;
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, || {
                let prog = Program::new(project);
                let mut interp = Interp::new(&prog, TraceSink::new());
                interp.step_limit = opts.step_limit.unwrap_or(DEFAULT_STEP_LIMIT);
                let report = run_all(&mut interp, opts);
                let db = std::mem::take(&mut interp.sink).finish();
                (report, db)
            })
            .map_err(|e| Error::Other(format!("cannot start runner thread: {e}")))?
            .join()
            .map_err(|_| Error::Other("runner thread panicked".into()))
    })
}

/// Run the suite found under `project_dir` (its `src/` and `tests/` trees).
pub fn execute_tests(project_dir: &Path, filter: Option<BTreeSet<EntityId>>) -> Result<TestReport> {
    let tree = SourceTree::load(project_dir)?;
    execute_tree(&tree, filter)
}

pub fn execute_tree(tree: &SourceTree, filter: Option<BTreeSet<EntityId>>) -> Result<TestReport> {
    let project = ParsedProject::parse(tree)?;
    let opts = RunOptions {
        filter,
        step_limit: None,
    };
    Ok(run_project(&project, &opts)?.0)
}

/// Run the whole instrumented copy, write `<deps_dir>/*.dep` when given, and return the database.
pub fn collect_dependencies(instrumented_dir: &Path, deps_dir: Option<&Path>) -> Result<DependencyDb> {
    let tree = SourceTree::load(instrumented_dir)?;
    let db = collect_tree(&tree)?.1;
    if let Some(dir) = deps_dir {
        db.write(dir)?;
    }
    Ok(db)
}

pub fn collect_tree(tree: &SourceTree) -> Result<(TestReport, DependencyDb)> {
    let project = ParsedProject::parse(tree)?;
    let (report, db) = run_project(&project, &RunOptions::default())?;
    Ok((report, db?))
}

struct TestCase<'p> {
    owner: String,
    decl: &'p MethodDecl,
    key: String,
    expected: Option<String>,
}

fn run_all(interp: &mut Interp<'_>, opts: &RunOptions) -> TestReport {
    let prog = interp.prog;
    let mut classes: Vec<&str> = prog
        .classes
        .iter()
        .filter(|(fq, _)| !test_cases(prog, fq).is_empty())
        .map(|(fq, _)| fq.as_str())
        .collect();
    classes.sort();
    let mut report = TestReport::default();
    for class in classes {
        if opts.wants_class(class) {
            run_class(interp, class, opts, &mut report);
        }
    }
    report.output = std::mem::take(&mut interp.output);
    report
}

/// Test methods of `class`, inherited ones first in ancestor order; overrides keep the inherited position.
fn test_cases<'p>(prog: &Program<'p>, class: &str) -> Vec<TestCase<'p>> {
    let mut chain = prog.chain(class);
    chain.reverse();
    let mut cases: Vec<TestCase<'p>> = Vec::new();
    for c in chain {
        for m in &prog.info(c).model.methods {
            let key = m.signature.key();
            let slot = cases.iter().position(|t| t.key == key);
            if !m.is_test {
                if let Some(i) = slot {
                    cases.remove(i);
                }
                continue;
            }
            let case = TestCase {
                owner: c.to_string(),
                decl: &m.decl,
                key,
                expected: m.expected_exception.clone(),
            };
            match slot {
                Some(i) => cases[i] = case,
                None => cases.push(case),
            }
        }
    }
    cases
}

fn setup_methods<'p>(prog: &Program<'p>, class: &str, before_class: bool) -> Vec<(String, &'p MethodDecl)> {
    let mut chain = prog.chain(class);
    chain.reverse();
    let mut out = Vec::new();
    for c in chain {
        for m in &prog.info(c).model.methods {
            let wanted = if before_class { m.is_before_class } else { m.is_before };
            if wanted {
                out.push((c.to_string(), &m.decl));
            }
        }
    }
    out
}

fn raise_text(r: &Raise) -> String {
    match r {
        Raise::Throw { name, message } => format!("{name}: {message}"),
        Raise::AssertFail(m) => m.clone(),
    }
}

fn run_class(interp: &mut Interp<'_>, class: &str, opts: &RunOptions, report: &mut TestReport) {
    let prog = interp.prog;
    interp.reset_statics();
    interp.reset_steps();
    interp.sink.set_class(Some(class));
    let marker = prog
        .info(class)
        .model
        .head
        .annotations
        .iter()
        .find(|a| a.name == TRACE_CLASS)
        .and_then(|a| match a.arg("id") {
            Some(AnnotationValue::Str(s)) => Some(s.clone()),
            _ => None,
        });
    if let Some(m) = &marker {
        interp.sink.open(m);
    }

    let cases: Vec<TestCase<'_>> = test_cases(prog, class)
        .into_iter()
        .filter(|t| opts.wants_method(class, &t.key))
        .collect();

    let setup: R<Vec<Vec<Value>>> = (|| {
        interp.ensure_init(class)?;
        for (owner, decl) in setup_methods(prog, class, true) {
            interp.invoke(&owner, decl, None, Vec::new())?;
        }
        parameter_rows(interp, class)
    })();

    match setup {
        Err(e) => {
            for t in &cases {
                report.outcomes.push(TestOutcome {
                    class: class.to_string(),
                    method: t.key.clone(),
                    row: None,
                    outcome: Outcome::Error(raise_text(&e)),
                    millis: 0,
                });
            }
        }
        Ok(rows) => {
            let parameterized = prog.info(class).model.has_annotation("Parameterized");
            let rows: Vec<Option<(usize, Vec<Value>)>> = if parameterized {
                rows.into_iter().enumerate().map(Some).collect()
            } else {
                vec![None]
            };
            for row in &rows {
                for t in &cases {
                    let started = Instant::now();
                    interp.reset_steps();
                    let row_index = row.as_ref().map(|(i, _)| *i);
                    let outcome = run_case(interp, class, t, row.as_ref().map(|(_, v)| v.as_slice()), row_index, report);
                    report.outcomes.push(TestOutcome {
                        class: class.to_string(),
                        method: t.key.clone(),
                        row: row_index,
                        outcome,
                        millis: started.elapsed().as_millis(),
                    });
                }
            }
        }
    }
    if let Some(m) = &marker {
        interp.sink.close(m);
    }
    interp.sink.set_class(None);
}

fn parameter_rows(interp: &mut Interp<'_>, class: &str) -> R<Vec<Vec<Value>>> {
    if !interp.prog.info(class).model.has_annotation("Parameterized") {
        return Ok(Vec::new());
    }
    let rows = match interp.read_static(class, "params")? {
        Value::List(l) => l.borrow().clone(),
        other => return Err(Raise::throw("TypeError", format!("params is {}", other.type_name()))),
    };
    rows.into_iter()
        .map(|r| match r {
            Value::List(l) => Ok(l.borrow().clone()),
            single => Ok(vec![single]),
        })
        .collect()
}

fn run_case(
    interp: &mut Interp<'_>,
    class: &str,
    t: &TestCase<'_>,
    row: Option<&[Value]>,
    row_index: Option<usize>,
    report: &mut TestReport,
) -> Outcome {
    let result: R<()> = (|| {
        let Value::Obj(obj) = interp.construct(class, Vec::new())? else {
            unreachable!("constructors yield objects");
        };
        if let Some(values) = row {
            let fields = &interp.prog.info(class).instance_fields;
            for (f, v) in fields.iter().zip(values) {
                obj.borrow_mut().fields.insert(f.name.clone(), v.clone());
            }
        }
        for (owner, decl) in setup_methods(interp.prog, class, false) {
            interp.invoke(&owner, decl, Some(obj.clone()), Vec::new())?;
        }
        let mut frame = Frame::new(&t.owner, Some(obj));
        let mut events = Vec::new();
        let r = run_body(interp, &mut frame, &t.decl.body, &mut events);
        for (ordinal, passed) in events {
            report.assertions.push(AssertionEvent {
                class: class.to_string(),
                method: t.key.clone(),
                row: row_index,
                ordinal,
                passed,
            });
        }
        r
    })();
    match (result, &t.expected) {
        (Ok(()), None) => Outcome::Pass,
        (Ok(()), Some(e)) => {
            report.assertions.push(AssertionEvent {
                class: class.to_string(),
                method: t.key.clone(),
                row: row_index,
                ordinal: t.decl.body.len(),
                passed: false,
            });
            Outcome::Fail(format!("expected {e}"))
        }
        (Err(Raise::Throw { name, .. }), Some(e)) if &name == e => Outcome::Pass,
        (Err(Raise::AssertFail(m)), _) => Outcome::Fail(m),
        (Err(r), _) => Outcome::Error(raise_text(&r)),
    }
}

/// Execute a test body statement by statement, noting each top-level assertion.
/// Method-level markers wrapping the whole body are looked through.
fn run_body(interp: &mut Interp<'_>, frame: &mut Frame, body: &[Stmt], events: &mut Vec<(usize, bool)>) -> R<()> {
    if let [Stmt::Trace { entity, body: inner }] = body {
        if entity.starts_with("M=") {
            interp.sink.open(entity);
            let r = run_body(interp, frame, inner, events);
            interp.sink.close(entity);
            return r;
        }
    }
    for (ordinal, stmt) in body.iter().enumerate() {
        let is_assert = match stmt {
            Stmt::Assert { .. } => true,
            Stmt::Trace { body, .. } => matches!(body.as_slice(), [Stmt::Assert { .. }]),
            _ => false,
        };
        let r = interp.exec(frame, stmt);
        if is_assert {
            events.push((ordinal, !matches!(r, Err(Raise::AssertFail(_)))));
            if let Err(Raise::Throw { .. }) = r {
                events.pop();
            }
        }
        r?;
    }
    Ok(())
}

/// Outcomes keyed by `(class, method key, row)`.
pub fn outcome_map(report: &TestReport) -> BTreeMap<(String, String, Option<usize>), Outcome> {
    report
        .outcomes
        .iter()
        .map(|o| ((o.class.clone(), o.method.clone(), o.row), o.outcome.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(files: &[(&str, &str)]) -> TestReport {
        execute_tree(&SourceTree::from_files(files.iter().copied()), None).unwrap()
    }

    #[test]
    fn slice_suffix_is_stripped() {
        assert_eq!(original_method_key("testExp__slice3()"), "testExp()");
        assert_eq!(original_method_key("a__sliceX()"), "a__sliceX()");
        assert_eq!(original_method_key("f(int)"), "f(int)");
    }

    #[test]
    fn empty_project_runs_nothing() {
        let r = run(&[]);
        assert_eq!(r.tests_run(), 0);
    }

    #[test]
    fn expected_exceptions() {
        let r = run(&[(
            "tests/T.mj",
            "class T { @Test(expected=DivByZero) void a() { int x = 1 / 0; } @Test(expected=DivByZero) void b() { int x = 1; } @Test(expected=DivByZero) void c() { Object o = null; o.f(); } }",
        )]);
        assert_eq!(r.outcome_of("T", "a()"), Some(&Outcome::Pass));
        assert!(matches!(r.outcome_of("T", "b()"), Some(Outcome::Fail(_))));
        assert!(matches!(r.outcome_of("T", "c()"), Some(Outcome::Error(_))));
    }

    #[test]
    fn before_hooks_and_fresh_instances() {
        let r = run(&[(
            "tests/T.mj",
            "class T { static int classRuns; int n; @BeforeClass static void once() { classRuns += 1; } @Before void setUp() { n += 1; } \
             @Test void a() { assertEq(1, n); assertEq(1, classRuns); } @Test void b() { n += 5; assertEq(6, n); } }",
        )]);
        assert!(r.all_passed(), "{:?}", r.outcomes);
        assert_eq!((r.tests_run(), r.assertions_evaluated()), (2, 3));
    }

    #[test]
    fn failed_assertion_stops_its_method_only() {
        let r = run(&[(
            "tests/T.mj",
            "class T { @Test void a() { assertEq(1, 2); assertEq(3, 4); } @Test void b() { assertTrue(true); } }",
        )]);
        assert_eq!((r.failures(), r.assertions_evaluated()), (1, 2));
        assert_eq!(r.outcome_of("T", "b()"), Some(&Outcome::Pass));
    }

    #[test]
    fn parameterized_rows_bind_fields() {
        let r = run(&[(
            "tests/P.mj",
            "@Parameterized class P { static List params = [[1, 2], [3, 7]]; int x; int y; @Test void twice() { assertEq(y, x * 2); } }",
        )]);
        assert_eq!(r.outcomes.len(), 2);
        assert!(r.outcomes[0].outcome.is_pass());
        assert!(!r.outcomes[1].outcome.is_pass());
        assert_eq!(r.outcomes[1].entity(), "M=P#twice()[1]");
        assert_eq!(r.tests_run(), 1);
    }

    #[test]
    fn inherited_tests_run_in_subclass() {
        let r = run(&[
            ("tests/A.mj", "class A { int base() { return 1; } @Test void t() { assertEq(1, base()); } }"),
            ("tests/B.mj", "class B extends A { int base() { return 2; } @Test void u() { assertTrue(true); } }"),
        ]);
        let b: Vec<_> = r.outcomes.iter().filter(|o| o.class == "B").map(|o| o.method.as_str()).collect();
        assert_eq!(b, ["t()", "u()"]);
        assert!(!r.outcome_of("B", "t()").unwrap().is_pass());
    }

    #[test]
    fn filter_limits_execution() {
        let tree = SourceTree::from_files([
            ("tests/A.mj", "class A { @Test void a() { } @Test void b() { } }"),
            ("tests/B.mj", "class B { @Test void c() { } }"),
        ]);
        let filter = BTreeSet::from([EntityId::Method("A".into(), "b()".into())]);
        let r = execute_tree(&tree, Some(filter)).unwrap();
        assert_eq!(r.outcomes.len(), 1);
        assert_eq!(r.outcomes[0].method, "b()");
    }
}
