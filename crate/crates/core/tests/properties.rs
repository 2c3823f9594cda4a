use proptest::prelude::*;
use selertion::fingerprint::{compute_changes, smart_checksum, ChecksumStore, Fragment};
use selertion::frontend::lexer::tokenize;
use selertion::frontend::parser::parse_classes;
use selertion::frontend::printer::print_classes;
use selertion::frontend::{EffectSummary, ParsedProject};
use selertion::slicer::{build_pdg, slice_assertions};
use selertion::SourceTree;

const VARS: [&str; 3] = ["a", "b", "c"];

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..100).prop_map(|v| v.to_string()),
        prop::sample::select(&VARS[..]).prop_map(str::to_string),
        prop::sample::select(&VARS[..]).prop_map(|v| format!("h.twice({v})")),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        (inner.clone(), prop::sample::select(&["+", "-", "*", "%"][..]), inner)
            .prop_map(|(l, op, r)| format!("({l} {op} {r})"))
    })
}

fn stmt() -> impl Strategy<Value = String> {
    let var = || prop::sample::select(&VARS[..]);
    prop_oneof![
        (var(), expr()).prop_map(|(v, e)| format!("{v} = {e};")),
        (var(), expr()).prop_map(|(v, e)| format!("{v} += {e};")),
        (expr(), expr()).prop_map(|(l, r)| format!("assertEq({l}, {r});")),
        (expr(), expr()).prop_map(|(l, r)| format!("assertTrue({l} < {r});")),
        var().prop_map(|v| format!("h.keep({v});")),
    ]
}

fn test_source(body: &[String]) -> String {
    format!(
        "class T {{\n    @Test\n    void t() {{\n        Helper h = new Helper();\n        int a = 1;\n        int b = 2;\n        int c = 3;\n        {}\n    }}\n}}\n",
        body.join("\n        ")
    )
}

const HELPER: &str = "class Helper {\n    int kept;\n\n    int twice(int x) {\n        return 2 * x;\n    }\n\n    void keep(int x) {\n        kept = x;\n    }\n}\n";

/// The same token stream laid out with other whitespace and comments.
fn relayout(src: &str, gaps: &[u8]) -> String {
    let tokens = tokenize(src, "x.mj").expect("lexes");
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.start == t.end {
            continue;
        }
        out.push_str(&src[t.start..t.end]);
        out.push_str(match gaps[i % gaps.len()] % 4 {
            0 => " ",
            1 => "\n\t",
            2 => " /* c */ ",
            _ => " // c\n",
        });
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printing_is_a_fixpoint(body in prop::collection::vec(stmt(), 1..8)) {
        let src = test_source(&body);
        let once = print_classes(&parse_classes(&src, "tests/T.mj").unwrap());
        let twice = print_classes(&parse_classes(&once, "tests/T.mj").unwrap());
        prop_assert_eq!(&once, &twice);
        let a = parse_classes(&src, "tests/T.mj").unwrap();
        let b = parse_classes(&once, "tests/T.mj").unwrap();
        prop_assert_eq!(smart_checksum(Fragment::File(&a)), smart_checksum(Fragment::File(&b)));
    }

    #[test]
    fn layout_never_changes_checksums(body in prop::collection::vec(stmt(), 1..8), gaps in prop::collection::vec(any::<u8>(), 1..16)) {
        let src = test_source(&body);
        let tree = |test: String| SourceTree::from_files([("src/Helper.mj", HELPER.to_string()), ("tests/T.mj", test)]);
        let before = ChecksumStore::from_project(&ParsedProject::parse(&tree(src.clone())).unwrap());
        let after = ChecksumStore::from_project(&ParsedProject::parse(&tree(relayout(&src, &gaps))).unwrap());
        prop_assert!(compute_changes(Some(&before), &after).is_empty());
        prop_assert_eq!(before.revision_id, after.revision_id);
    }

    #[test]
    fn body_edits_always_change_checksums(body in prop::collection::vec(stmt(), 1..8), extra in stmt(), at in any::<prop::sample::Index>()) {
        let src = test_source(&body);
        let mut edited = body.clone();
        edited.insert(at.index(body.len() + 1), extra);
        let tree = |test: String| SourceTree::from_files([("src/Helper.mj", HELPER.to_string()), ("tests/T.mj", test)]);
        let before = ChecksumStore::from_project(&ParsedProject::parse(&tree(src)).unwrap());
        let after = ChecksumStore::from_project(&ParsedProject::parse(&tree(test_source(&edited))).unwrap());
        let delta = compute_changes(Some(&before), &after);
        prop_assert!(delta.methods.contains_key("T.t()"), "{:?}", delta);
    }

    #[test]
    fn slices_are_closed_and_end_in_their_assertion(body in prop::collection::vec(stmt(), 1..10)) {
        let tree = SourceTree::from_files([("src/Helper.mj", HELPER.to_string()), ("tests/T.mj", test_source(&body))]);
        let project = ParsedProject::parse(&tree).unwrap();
        let method = project.method("T", "t()").unwrap();
        let pdg = build_pdg(method, &EffectSummary::compute(&project));
        let slices = slice_assertions(method, &pdg);
        prop_assert_eq!(slices.len(), method.assertion_count());
        for s in &slices {
            prop_assert_eq!(s.statements.last().copied(), Some(s.assertion));
            prop_assert!(s.statements.windows(2).all(|w| w[0] < w[1]));
            for &n in &s.statements {
                for p in pdg.predecessors(n) {
                    prop_assert!(s.contains(p));
                }
                if n != s.assertion {
                    prop_assert!(!method.body[n].is_assertion());
                }
            }
        }
    }
}
