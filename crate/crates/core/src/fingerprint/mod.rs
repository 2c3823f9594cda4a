//! Smart checksums and class/method-level change detection between revisions.

mod changes;
pub(crate) mod store;

pub use changes::{
    compute_changes, compute_lookup_changes, ChangeSet, ClassChange, ClassChangeKind, Hierarchy,
    MethodChange, MethodChangeKind, Side,
};
pub use store::{ChecksumStore, ClassEntry, HASH_ALGORITHM, STORE_VERSION};

use crate::frontend::ast::{ClassDecl, Member, MethodDecl};
use crate::frontend::printer::{class_head_to_string, member_to_string, method_to_string, print_classes};
use sha2::{Digest, Sha256};

/// Hex SHA-256 of `text`.
pub fn checksum_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A syntax fragment with its own checksum category.
#[derive(Debug, Clone, Copy)]
pub enum Fragment<'a> {
    File(&'a [ClassDecl]),
    Head(&'a ClassDecl),
    Others(&'a [Member]),
    Method(&'a MethodDecl),
}

/// Checksum over the canonical printed form, so comments and layout never count.
pub fn smart_checksum(fragment: Fragment<'_>) -> String {
    let text = match fragment {
        Fragment::File(classes) => print_classes(classes),
        Fragment::Head(class) => class_head_to_string(class),
        Fragment::Others(members) => members.iter().map(member_to_string).collect(),
        Fragment::Method(m) => method_to_string(m),
    };
    checksum_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    const EMPTY: &str = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

    fn method_sum(src: &str) -> String {
        let f = parse_source(src, "src/A.mj").unwrap();
        smart_checksum(Fragment::Method(&f.classes[0].methods[0].decl))
    }

    #[test]
    fn indentation_does_not_matter() {
        let a = method_sum("class A { int f(int x) { return x + 1; } }");
        let b = method_sum("class A {\n\n  int f( int x )\n{\n\t\treturn x+1; // inc\n} }");
        assert_eq!(a, b);
    }

    #[test]
    fn empty_others_is_empty_digest() {
        let f = parse_source("class A { }", "src/A.mj").unwrap();
        assert_eq!(smart_checksum(Fragment::Others(&f.classes[0].others)), EMPTY);
        assert_eq!(smart_checksum(Fragment::File(&[])), EMPTY);
    }

    #[test]
    fn renaming_a_local_changes_the_sum() {
        let a = method_sum("class A { int f() { int x = 1; return x; } }");
        let b = method_sum("class A { int f() { int y = 1; return y; } }");
        assert_ne!(a, b);
    }

    #[test]
    fn compound_assignment_is_not_normalized() {
        let a = method_sum("class A { int f(int a) { a += 1; return a; } }");
        let b = method_sum("class A { int f(int a) { a = a + 1; return a; } }");
        assert_ne!(a, b);
    }
}
