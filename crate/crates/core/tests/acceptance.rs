//! End-to-end acceptance checks, one printed line per criterion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selertion::driver::{cmd_analyze_and_run, cmd_init, cmd_retestall, AnalyzeOptions, Store};
use selertion::fingerprint::{compute_changes, ChecksumStore};
use selertion::frontend::ast::{ClassDecl, Member, MethodDecl};
use selertion::frontend::lexer::{tokenize, Tok};
use selertion::frontend::parser::parse_classes;
use selertion::frontend::printer::print_classes;
use selertion::frontend::ParsedProject;
use selertion::harness::{corpus_project, generate_mutant, select_and_run, sweep, Snapshot, CORPUS};
use selertion::instrument::InstrumentedCopy;
use selertion::runtime::{execute_tree, EntityId, Outcome, TestReport};
use selertion::select::{apply_rewrite, rewrite_tests, SelectionResult, SliceRef};
use selertion::slicer::slice_method_name;
use selertion::SourceTree;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(started: Instant, limit: Duration) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))
}

fn corpus(name: &str) -> SourceTree {
    corpus_project(name).expect("corpus project").tree()
}

fn edited(tree: &SourceTree, path: &str, from: &str, to: &str) -> Result<SourceTree, String> {
    let text = tree.get(path).ok_or(format!("no file {path}"))?;
    ensure(text.contains(from), format!("`{from}` not in {path}"))?;
    let mut out = tree.clone();
    out.insert(path, text.replacen(from, to, 1));
    Ok(out)
}

fn checksums(tree: &SourceTree) -> Result<ChecksumStore, String> {
    Ok(ChecksumStore::from_project(&ok(ParsedProject::parse(tree))?))
}

/// Statement ordinals as line numbers of the reference listing of ComplexTest.
fn listing_lines(method: &str, statements: &[usize]) -> BTreeSet<usize> {
    let base = if method == "testExp()" { 3 } else { 13 };
    statements.iter().map(|s| base + s).collect()
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let snap = ok(Snapshot::analyze(corpus("complexmath"), false))?;
    let got: BTreeSet<BTreeSet<usize>> = snap
        .slices
        .all_slices()
        .map(|(_, s)| listing_lines(&s.method.key(), &s.statements))
        .collect();
    within(started, Duration::from_secs(1))?;
    let want: BTreeSet<BTreeSet<usize>> = [vec![3, 4, 5], vec![6], vec![7, 8], vec![13, 14, 15], vec![13, 14, 16]]
        .into_iter()
        .map(|v| v.into_iter().collect())
        .collect();
    ensure(snap.slices.slice_count() == 5, format!("{} slices", snap.slices.slice_count()))?;
    ensure(got == want, format!("{got:?}"))?;
    Ok("five fragments match".into())
}

fn slice(class: &str, method: &str, assertion: usize, k: usize) -> SliceRef {
    SliceRef {
        class: class.into(),
        method: method.into(),
        assertion,
        k,
    }
}

fn criterion_2() -> Check {
    let base = ok(Snapshot::analyze(corpus("complexmath"), false))?;
    let (_, db) = ok(base.collect())?;
    let want = BTreeSet::from([
        slice("ComplexTest", "testExp()", 5, 3),
        slice("ComplexTest", "testNegate()", 2, 1),
        slice("ComplexTest", "testNegate()", 3, 2),
    ]);
    let mut revisions = vec![(
        "edit".to_string(),
        edited(&base.tree, "src/Complex.mj", "return new Complex(-re, -im);", "return new Complex(re, im);")?,
    )];
    for seed in 0..200 {
        let m = ok(generate_mutant(&base.tree, seed))?;
        if m.site.method == "Complex.negate()" {
            revisions.push((format!("seed {seed}"), m.tree));
        }
    }
    ensure(revisions.len() > 1, "no mutant lands in Complex.negate")?;
    for (label, tree) in &revisions {
        let started = Instant::now();
        let new = ok(Snapshot::analyze(tree.clone(), false))?;
        let run = ok(select_and_run(&base, &db, &new))?;
        within(started, Duration::from_secs(2))?;
        let sel = &run.selection;
        ensure(sel.slices == want, format!("{label}: slices {:?}", sel.slices))?;
        ensure(sel.methods.is_empty() && sel.classes.is_empty(), format!("{label}: coarse entries {sel:?}"))?;
        let ratio = run.metrics.selected_assertion_ratio();
        ensure(ratio == 0.6, format!("{label}: ratio {ratio}"))?;
    }
    Ok(format!("{} negate revisions select the three fragments, ratio 0.6", revisions.len()))
}

fn criteria_3_4() -> (Check, Check) {
    let started = Instant::now();
    let results = match sweep(CORPUS, 20) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err("sweep failed".into())),
    };
    let took = started.elapsed();
    let sites: BTreeSet<_> = results
        .iter()
        .map(|r| (r.project.clone(), r.site.op, r.site.location.clone()))
        .collect();
    let missed: Vec<_> = results.iter().filter(|r| !r.missed.is_empty()).collect();
    let changed = results.iter().filter(|r| !r.changed.is_empty()).count();
    let safety = (|| {
        ensure(results.len() >= 100, format!("{} mutants", results.len()))?;
        ensure(sites.len() >= 100, format!("{} distinct sites", sites.len()))?;
        ensure(took < Duration::from_secs(300), format!("took {took:?}"))?;
        ensure(missed.is_empty(), format!("missed: {:?}", missed.iter().map(|r| (&r.project, r.seed, &r.missed)).collect::<Vec<_>>()))?;
        Ok(format!(
            "{} mutants, {} distinct sites, {changed} outcome-changing, 0 missed, {took:?}",
            results.len(),
            sites.len()
        ))
    })();
    let dominance = (|| {
        let mut strict = BTreeSet::new();
        for r in &results {
            let (f, c) = (r.fine.selected_assertion_ratio(), r.coarse.selected_assertion_ratio());
            ensure(f <= c, format!("{} seed {}: {f} > {c}", r.project, r.seed))?;
            if f < c {
                strict.insert(r.project.clone());
            }
        }
        ensure(!strict.is_empty(), "never strictly below the method-level ratio")?;
        Ok(format!("fine <= coarse on all mutants, strictly lower in {strict:?}"))
    })();
    (safety, dominance)
}

const WHITESPACE: [&str; 5] = [" ", "\t", "\n", "\n\n    ", "  \t\n"];
const COMMENTS: [&str; 3] = [" /* note */ ", "\n// note\n", " /** doc\n * more */\n"];

fn perturb(text: &str, path: &str, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let tokens = ok(tokenize(text, path))?;
    // insertion points directly after a token that is followed by a gap
    let gaps: Vec<usize> = tokens
        .windows(2)
        .filter(|w| w[0].end < w[1].start)
        .map(|w| w[0].end)
        .collect();
    ensure(!gaps.is_empty(), format!("no gaps in {path}"))?;
    let mut points: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| gaps[rng.gen_range(0..gaps.len())]).collect();
    points.sort_unstable();
    let mut out = text.to_string();
    for &at in points.iter().rev() {
        let insert = if rng.gen_bool(0.5) {
            WHITESPACE[rng.gen_range(0..WHITESPACE.len())]
        } else {
            COMMENTS[rng.gen_range(0..COMMENTS.len())]
        };
        out.insert_str(at, insert);
    }
    Ok(out)
}

/// Byte ranges of identifier and literal tokens inside method bodies, with a replacement.
fn in_method_edits(text: &str, path: &str) -> Result<Vec<(usize, usize, String)>, String> {
    let tokens = ok(tokenize(text, path))?;
    let mut depth = 0usize;
    let mut out = Vec::new();
    for t in &tokens {
        match &t.tok {
            Tok::LBrace => depth += 1,
            Tok::RBrace => depth = depth.saturating_sub(1),
            _ if depth < 2 => {}
            Tok::Ident(s) => out.push((t.start, t.end, format!("{s}q"))),
            Tok::Int(v) => out.push((t.start, t.end, (v + 1).to_string())),
            Tok::Float(_) => out.push((t.start, t.end, format!("1{}", &text[t.start..t.end]))),
            Tok::Str(s) => out.push((t.start, t.end, format!("\"{s}q\""))),
            Tok::True => out.push((t.start, t.end, "false".into())),
            Tok::False => out.push((t.start, t.end, "true".into())),
            Tok::Plus => out.push((t.start, t.end, "-".into())),
            Tok::Lt => out.push((t.start, t.end, "<=".into())),
            _ => {}
        }
    }
    Ok(out)
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    let bases: Vec<(SourceTree, ChecksumStore)> = CORPUS
        .iter()
        .map(|p| {
            let t = p.tree();
            let c = checksums(&t)?;
            Ok((t, c))
        })
        .collect::<Result<_, String>>()?;
    for i in 0..1000 {
        let (tree, sums) = &bases[rng.gen_range(0..bases.len())];
        let paths: Vec<&str> = tree.paths().collect();
        let path = paths[rng.gen_range(0..paths.len())];
        let mut t = tree.clone();
        t.insert(path, perturb(tree.get(path).unwrap_or_default(), path, &mut rng)?);
        let delta = compute_changes(Some(sums), &checksums(&t)?);
        ensure(delta.is_empty(), format!("perturbation {i} of {path} changed: {delta:?}"))?;
    }
    let mut edits = 0;
    for (tree, sums) in &bases {
        for (path, text) in tree.sources() {
            for (start, end, with) in in_method_edits(text, path)? {
                let mut t = tree.clone();
                t.insert(path, format!("{}{with}{}", &text[..start], &text[end..]));
                let delta = compute_changes(Some(sums), &checksums(&t)?);
                ensure(!delta.is_empty(), format!("edit `{}` -> `{with}` in {path} undetected", &text[start..end]))?;
                edits += 1;
            }
        }
    }
    Ok(format!("1000 perturbations unchanged, {edits} token edits detected"))
}

fn read_dir_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir").flatten() {
            let p = entry.path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

type Step = Box<dyn Fn(&Path) -> std::io::Result<()>>;

fn replace_in(rel: &'static str, from: &'static str, to: &'static str) -> Step {
    Box::new(move |dir| {
        let p = dir.join(rel);
        let text = std::fs::read_to_string(&p)?;
        assert!(text.contains(from), "`{from}` not in {rel}");
        std::fs::write(&p, text.replacen(from, to, 1))
    })
}

fn write_file(rel: &'static str, text: &'static str) -> Step {
    Box::new(move |dir| {
        std::fs::create_dir_all(dir.join(rel).parent().expect("parent"))?;
        std::fs::write(dir.join(rel), text)
    })
}

fn criterion_6() -> Check {
    let work = ok(tempfile::tempdir())?;
    let dir = work.path().join("project");
    ok(corpus("inherit").write_to(&dir))?;
    let store = Store::new(work.path().join("store"));
    ok(cmd_init(&dir, &store, false, false))?;
    let steps: Vec<(&str, Step)> = vec![
        ("production edit", replace_in("src/Shape.mj", "return w * h;", "return h * w;")),
        ("comment only", replace_in("src/Shape.mj", "class Square", "// squares\nclass Square")),
        ("test edit", replace_in("tests/SquareTest.mj", "assertNear(9.0, a, 1.0e-9);", "assertNear(9.0, a, 1.0e-8);")),
        (
            "new production file",
            write_file(
                "src/Circle.mj",
                "class Circle extends Shape {\n    float r;\n\n    Circle(float r) {\n        this.r = r;\n    }\n\n    float area() {\n        return 3.0 * r * r;\n    }\n}\n",
            ),
        ),
        (
            "new test file",
            write_file(
                "tests/CircleTest.mj",
                "class CircleTest {\n    @Test\n    void testArea() {\n        Circle c = new Circle(1.0);\n        assertNear(3.0, c.area(), 1.0e-9);\n        assertEq(0, c.corners());\n    }\n}\n",
            ),
        ),
        ("edit new file", replace_in("src/Circle.mj", "return 3.0 * r * r;", "return r * r * 3.0;")),
        ("base test edit", replace_in("tests/ShapeTestBase.mj", "assertTrue(s.corners() >= 0);", "assertTrue(s.corners() > -1);")),
        (
            "two files",
            Box::new(|dir: &Path| {
                replace_in("src/Shape.mj", "return 2 * (w + h);", "return (w + h) * 2;")(dir)?;
                replace_in("tests/RectTest.mj", "assertEq(\"rect\", r.name());", "assertEq(\"rect\", r.name());\n        assertTrue(r.isPolygon());")(dir)
            }),
        ),
        ("delete test file", Box::new(|dir: &Path| std::fs::remove_file(dir.join("tests/CircleTest.mj")))),
        ("revert", replace_in("src/Shape.mj", "return h * w;", "return w * h;")),
    ];
    let mut counts = Vec::new();
    for (i, (label, step)) in steps.iter().enumerate() {
        ok(step(&dir))?;
        let run = ok(cmd_analyze_and_run(&dir, &store, AnalyzeOptions::default()))?;
        let synced: BTreeSet<String> = run.synced.iter().cloned().collect();
        ensure(
            synced == run.delta.files,
            format!("revision {} ({label}): synced {synced:?} vs changed {:?}", i + 1, run.delta.files),
        )?;
        let snap = ok(Snapshot::analyze(ok(SourceTree::load(&dir))?, false))?;
        let fresh = work.path().join(format!("fresh{i}"));
        ok(InstrumentedCopy::build(&fresh, &snap.project, &snap.levels))?;
        ensure(
            read_dir_files(&store.instrumented()) == read_dir_files(&fresh),
            format!("revision {} ({label}): instrumented copy differs from a fresh build", i + 1),
        )?;
        counts.push(synced.len());
    }
    Ok(format!("10 revisions, re-instrumented per revision {counts:?}"))
}

/// Pass, failure, or the raised exception name.
fn category(o: &Outcome) -> String {
    match o {
        Outcome::Pass => "pass".into(),
        Outcome::Fail(_) => "fail".into(),
        Outcome::Error(m) => format!("error:{}", m.split(':').next().unwrap_or("")),
    }
}

fn outcome_of(report: &TestReport, class: &str, method: &str) -> Result<String, String> {
    report
        .outcome_of(class, method)
        .map(category)
        .ok_or(format!("{class}#{method} did not run"))
}

/// `class#key` cut after statement `ordinal`, with the earlier assertions
/// removed; the statement itself is kept only when `keep_last`.
fn prefix_method(snap: &Snapshot, class: &str, key: &str, ordinal: usize, keep_last: bool) -> Result<MethodDecl, String> {
    let m = snap.project.method(class, key).ok_or(format!("no {class}#{key}"))?;
    let mut decl = m.decl.clone();
    let tag = if keep_last { "prefix" } else { "reach" };
    decl.name = format!("{}__{tag}{ordinal}", m.decl.name);
    decl.body = m.body[..ordinal]
        .iter()
        .filter(|s| !s.is_assertion())
        .chain(keep_last.then(|| &m.body[ordinal]))
        .map(|s| s.ast.clone())
        .collect();
    Ok(decl)
}

/// Per-assertion outcomes of the original method: `None` when the method
/// raises before reaching that assertion.
fn original_outcomes(snap: &Snapshot, class: &str, key: &str, ordinals: &[usize]) -> Result<Vec<(Option<String>, String)>, String> {
    let name = key.trim_end_matches("()");
    let model = snap.project.class(class).ok_or("no class")?;
    let text = snap.tree.get(&model.path).ok_or("no file")?;
    let mut decls: Vec<ClassDecl> = ok(parse_classes(text, &model.path))?;
    let target = decls.iter_mut().find(|d| d.name == class).ok_or("class not in file")?;
    target.members.retain(|m| !matches!(m, Member::Method(d) if d.has_annotation("Test")));
    for &i in ordinals {
        target.members.push(Member::Method(prefix_method(snap, class, key, i, true)?));
        target.members.push(Member::Method(prefix_method(snap, class, key, i, false)?));
    }
    let mut tree = snap.tree.clone();
    tree.insert(model.path.clone(), print_classes(&decls));
    let report = ok(execute_tree(&tree, Some(BTreeSet::from([EntityId::Class(class.to_string())]))))?;
    ordinals
        .iter()
        .map(|i| {
            let reach = outcome_of(&report, class, &format!("{name}__reach{i}()"))?;
            let full = outcome_of(&report, class, &format!("{name}__prefix{i}()"))?;
            Ok(if reach == "pass" { (Some(full), reach) } else { (None, reach) })
        })
        .collect()
}

fn slice_outcomes(snap: &Snapshot, class: &str, key: &str) -> Result<Vec<String>, String> {
    let slices = snap.slices.method_slices(class, key).ok_or("no slices")?;
    let mut sel = SelectionResult::default();
    for (i, s) in slices.iter().enumerate() {
        sel.slices.insert(slice(class, key, s.assertion, i + 1));
    }
    let rewritten = ok(rewrite_tests(&sel, &snap.project, &snap.slices))?;
    let report = ok(execute_tree(
        &apply_rewrite(&snap.tree, &rewritten),
        Some(BTreeSet::from([EntityId::Class(class.to_string())])),
    ))?;
    (1..=slices.len())
        .map(|k| outcome_of(&report, class, &format!("{}()", slice_method_name(key.trim_end_matches("()"), k))))
        .collect()
}

/// Slices agree with the original on every assertion it reaches, and an
/// error raised before an assertion is still reported by some slice.
fn check_slices(snap: &Snapshot, class: &str, key: &str) -> Result<(usize, usize), String> {
    let ordinals: Vec<usize> = snap
        .slices
        .method_slices(class, key)
        .ok_or("no slices")?
        .iter()
        .map(|s| s.assertion)
        .collect();
    let sliced = slice_outcomes(snap, class, key)?;
    let original = original_outcomes(snap, class, key, &ordinals)?;
    let mut reached = 0;
    for ((got, (want, reach)), ordinal) in sliced.iter().zip(&original).zip(&ordinals) {
        match want {
            Some(want) => {
                ensure(got == want, format!("assertion {ordinal}: slice {got}, original {want}"))?;
                reached += 1;
            }
            None => ensure(
                sliced.contains(reach),
                format!("assertion {ordinal}: original raises {reach} first, no slice reports it"),
            )?,
        }
    }
    Ok((reached, sliced.iter().filter(|o| *o != "pass").count()))
}

fn criterion_7() -> Check {
    let mut compared = 0;
    let mut failing = 0;
    for p in CORPUS {
        let base = p.tree();
        let mut revisions = vec![base.clone()];
        for seed in 0..20 {
            revisions.push(ok(generate_mutant(&base, seed))?.tree);
        }
        for (r, tree) in revisions.into_iter().enumerate() {
            let snap = ok(Snapshot::analyze(tree, false))?;
            let methods: BTreeSet<(String, String)> = snap
                .slices
                .all_slices()
                .map(|(c, s)| (c.to_string(), s.method.key()))
                .collect();
            for (class, key) in methods {
                let (n, bad) = check_slices(&snap, &class, &key).map_err(|e| format!("{} revision {r} {class}#{key}: {e}", p.name))?;
                compared += n;
                failing += bad;
            }
        }
    }

    let base = ok(Snapshot::analyze(corpus("complexmath"), false))?;
    let (_, db) = ok(base.collect())?;
    let broken = ok(Snapshot::analyze(
        edited(&base.tree, "src/Complex.mj", "return new Complex(-re, -im);", "return new Complex(re, im);")?,
        false,
    ))?;
    let whole = ok(broken.retest_all())?;
    let whole_failed = whole.assertions.iter().filter(|a| a.method == "testNegate()" && !a.passed).count();
    ensure(whole_failed == 1, format!("unsliced run reports {whole_failed} failed testNegate assertions"))?;
    let run = ok(select_and_run(&base, &db, &broken))?;
    for k in [1, 2] {
        let m = format!("{}()", slice_method_name("testNegate", k));
        ensure(
            outcome_of(&run.report, "ComplexTest", &m)? == "fail",
            format!("{m} did not fail"),
        )?;
    }
    let sliced_failed = run
        .report
        .assertions
        .iter()
        .filter(|a| a.method.starts_with("testNegate__slice") && !a.passed)
        .count();
    ensure(sliced_failed == 2, format!("sliced run reports {sliced_failed} failed testNegate assertions"))?;
    Ok(format!("{compared} slice outcomes match ({failing} failing), masked negate failures both reported"))
}

struct Expectation {
    project: &'static str,
    prefixes: &'static [&'static str],
    edit: (&'static str, &'static str, &'static str),
    classes: &'static [&'static str],
    methods: &'static [&'static str],
    slices: &'static [&'static str],
}

const DOWNGRADES: [Expectation; 6] = [
    Expectation {
        project: "complexmath",
        prefixes: &["S=ComplexTest"],
        edit: ("src/Complex.mj", "return new Complex(-re, -im);", "return new Complex(-re, im);"),
        classes: &[],
        methods: &[],
        slices: &["S=ComplexTest#testExp()@5", "S=ComplexTest#testNegate()@2", "S=ComplexTest#testNegate()@3"],
    },
    Expectation {
        project: "inherit",
        prefixes: &["C=RectTest", "C=ShapeTestBase", "S=SquareTest"],
        edit: ("src/Shape.mj", "return w * h;", "return h * w;"),
        classes: &["RectTest"],
        methods: &[],
        slices: &["S=SquareTest#testSquare()@2", "S=SquareTest#testSquare()@3"],
    },
    Expectation {
        project: "params",
        prefixes: &["C=GcdTest", "S=MathUtilTest"],
        edit: ("src/MathUtil.mj", "int t = a % b;", "int t = a % b + 0;"),
        classes: &["GcdTest"],
        methods: &[],
        slices: &[],
    },
    Expectation {
        project: "expects",
        prefixes: &["M=AccountTest", "S=AccountTest"],
        edit: ("src/Account.mj", "if (amount > balance) {", "if (amount >= balance + 1) {"),
        classes: &[],
        methods: &["M=AccountTest#testOverdraw()", "M=AccountTest#testTransferTooMuch()"],
        slices: &["S=AccountTest#testTransfer()@3", "S=AccountTest#testTransfer()@4", "S=AccountTest#testTransfer()@5"],
    },
    Expectation {
        project: "loops",
        prefixes: &["M=StatsTest", "S=StatsTest"],
        edit: ("src/Stats.mj", "int best = values.get(0);", "int best = values.get(0) + 0;"),
        classes: &[],
        methods: &["M=StatsTest#testSumLoop()"],
        slices: &[],
    },
    Expectation {
        project: "chain",
        prefixes: &["C=CounterTest", "S=ResetTest"],
        edit: ("src/Counter.mj", "n += step;", "n = n + step;"),
        classes: &["CounterTest"],
        methods: &[],
        slices: &[],
    },
];

fn level_prefix(id: &EntityId) -> String {
    match id {
        EntityId::Class(c) => format!("C={c}"),
        EntityId::Method(c, _) => format!("M={c}"),
        EntityId::Statement(c, _, _) => format!("S={c}"),
    }
}

fn criterion_8() -> Check {
    for e in &DOWNGRADES {
        let base = ok(Snapshot::analyze(corpus(e.project), false))?;
        let (_, db) = ok(base.collect())?;
        let prefixes: BTreeSet<String> = db.entries.keys().map(level_prefix).collect();
        let want: BTreeSet<String> = e.prefixes.iter().map(|s| s.to_string()).collect();
        ensure(prefixes == want, format!("{}: prefixes {prefixes:?}", e.project))?;

        let (path, from, to) = e.edit;
        let new = ok(Snapshot::analyze(edited(&base.tree, path, from, to)?, false))?;
        let sel = ok(select_and_run(&base, &db, &new))?.selection;
        let rows = sel.manifest_rows();
        let of = |level: char| -> BTreeSet<String> { rows.iter().filter(|r| r.0 == level).map(|r| r.1.clone()).collect() };
        let set = |xs: &[&str]| -> BTreeSet<String> { xs.iter().map(|s| s.to_string()).collect() };
        let classes: BTreeSet<String> = e.classes.iter().map(|c| format!("C={c}")).collect();
        ensure(of('C') == classes, format!("{}: classes {:?}", e.project, of('C')))?;
        ensure(of('M') == set(e.methods), format!("{}: methods {:?}", e.project, of('M')))?;
        ensure(of('A') == set(e.slices), format!("{}: slices {:?}", e.project, of('A')))?;
    }
    Ok("six projects match their levels and selection paths".into())
}

fn criterion_9() -> Check {
    let mut total = 0;
    for p in CORPUS {
        let work = ok(tempfile::tempdir())?;
        ok(p.tree().write_to(work.path()))?;
        let store = Store::new(work.path().join(".selertion"));
        let init = ok(cmd_init(work.path(), &store, false, false))?;
        let all = ok(cmd_retestall(work.path()))?;
        ensure(init.report.tests_run() == all.tests_run(), format!("{}: init ran {} of {}", p.name, init.report.tests_run(), all.tests_run()))?;
        ensure(init.metrics.selected_test_ratio() == 1.0, format!("{}: test ratio {}", p.name, init.metrics.selected_test_ratio()))?;
        ensure(
            init.metrics.selected_assertion_ratio() == 1.0,
            format!("{}: assertion ratio {}", p.name, init.metrics.selected_assertion_ratio()),
        )?;
        let run = ok(cmd_analyze_and_run(work.path(), &store, AnalyzeOptions::default()))?;
        ensure(run.report.tests_run() == 0, format!("{}: unchanged run executed {}", p.name, run.report.tests_run()))?;
        ensure(run.selection.is_empty(), format!("{}: unchanged run selected {:?}", p.name, run.selection))?;
        total += all.tests_run();
    }
    Ok(format!("init ran all {total} tests, unchanged reruns ran none"))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    })
}

#[test]
fn acceptance() {
    let (c3, c4) = catch_unwind(criteria_3_4).unwrap_or_else(|_| (Err("sweep panicked".into()), Err("sweep panicked".into())));
    let results = [
        guarded(criterion_1),
        guarded(criterion_2),
        c3,
        c4,
        guarded(criterion_5),
        guarded(criterion_6),
        guarded(criterion_7),
        guarded(criterion_8),
        guarded(criterion_9),
    ];
    // written past the harness capture so the lines show on passing runs too
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let line = match r {
            Ok(detail) => format!("criterion {}: pass ({detail})\n", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("criterion {}: fail ({why})\n", i + 1)
            }
        };
        out.write_all(line.as_bytes()).expect("stdout");
    }
    drop(out);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
