use crate::error::{Error, Result};
use crate::frontend::ast::{BinOp, ClassDecl, Expr, Member, Stmt, UnOp};
use crate::frontend::model::ClassModel;
use crate::frontend::printer::print_classes;
use crate::frontend::ParsedProject;
use crate::tree::SourceTree;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MutationOp {
    ArithmeticOpReplace,
    RelationalOpReplace,
    ConstantReplace,
    StatementDelete,
}

impl MutationOp {
    pub fn as_str(self) -> &'static str {
        match self {
            MutationOp::ArithmeticOpReplace => "arithmeticOpReplace",
            MutationOp::RelationalOpReplace => "relationalOpReplace",
            MutationOp::ConstantReplace => "constantReplace",
            MutationOp::StatementDelete => "statementDelete",
        }
    }
}

impl fmt::Display for MutationOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A mutable spot in production code, e.g. `Complex.negate()/s0/e2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MutationSite {
    pub op: MutationOp,
    /// Signature of the method holding the site.
    pub method: String,
    pub location: String,
}

#[derive(Debug, Clone)]
pub struct MutatedRevision {
    pub base_revision: String,
    pub site: MutationSite,
    pub seed: u64,
    pub tree: SourceTree,
}

/// Walks production method bodies in pre-order, counting sites and applying
/// the mutation when the count reaches `target`.
struct Walker {
    target: Option<usize>,
    seen: usize,
    sites: Vec<MutationSite>,
    method: String,
    stmt: usize,
    expr: usize,
    applied: bool,
}

impl Walker {
    fn hit(&mut self, op: MutationOp, at_stmt: bool) -> bool {
        let location = if at_stmt {
            format!("{}/s{}", self.method, self.stmt)
        } else {
            format!("{}/s{}/e{}", self.method, self.stmt, self.expr)
        };
        let here = self.target == Some(self.seen);
        self.seen += 1;
        if self.target.is_none() {
            self.sites.push(MutationSite {
                op,
                method: self.method.clone(),
                location,
            });
        }
        if here {
            self.applied = true;
        }
        here
    }

    fn class(&mut self, decl: &mut ClassDecl, model: &ClassModel) {
        let mut nested = model.nested.iter();
        let mut methods = model.methods.iter();
        for member in &mut decl.members {
            match member {
                Member::Class(inner) => {
                    let m = nested.next().expect("nested models follow declaration order");
                    self.class(inner, m);
                }
                Member::Method(md) => {
                    let m = methods.next().expect("method models follow declaration order");
                    self.method = m.signature.to_string();
                    self.stmt = 0;
                    self.block(&mut md.body, true);
                }
                _ => {}
            }
        }
    }

    fn block(&mut self, block: &mut Vec<Stmt>, deletable: bool) {
        let mut i = 0;
        while i < block.len() {
            self.expr = 0;
            if deletable && matches!(block[i], Stmt::Expr(_) | Stmt::Assign { .. }) && self.hit(MutationOp::StatementDelete, true) {
                block.remove(i);
                return;
            }
            self.stmt(&mut block[i]);
            self.stmt += 1;
            i += 1;
        }
    }

    fn stmt(&mut self, stmt: &mut Stmt) {
        match stmt {
            Stmt::VarDecl { init: Some(e), .. } | Stmt::Expr(e) | Stmt::Return(Some(e)) => self.expr(e),
            Stmt::Assign { value, .. } => self.expr(value),
            Stmt::Assert { args, .. } => args.iter_mut().for_each(|e| self.expr(e)),
            Stmt::If {
                cond,
                then_block,
                else_block,
            } => {
                self.expr(cond);
                self.block(then_block, true);
                if let Some(b) = else_block {
                    self.block(b, true);
                }
            }
            Stmt::While { cond, body } => {
                self.expr(cond);
                self.block(body, true);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                if let Some(s) = init {
                    self.stmt(s);
                }
                if let Some(c) = cond {
                    self.expr(c);
                }
                if let Some(s) = update {
                    self.stmt(s);
                }
                self.block(body, true);
            }
            Stmt::Trace { body, .. } => self.block(body, true),
            _ => {}
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        let op = match e {
            Expr::Binary { op, .. } if op.is_arithmetic() => Some(MutationOp::ArithmeticOpReplace),
            Expr::Binary { op, .. } if op.is_relational() => Some(MutationOp::RelationalOpReplace),
            Expr::Unary { op: UnOp::Neg, .. } => Some(MutationOp::ArithmeticOpReplace),
            Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) => Some(MutationOp::ConstantReplace),
            _ => None,
        };
        if let Some(op) = op {
            let applied = self.hit(op, false);
            self.expr += 1;
            if applied {
                mutate_expr(e);
                return;
            }
        }
        match e {
            Expr::List(items) | Expr::New { args: items, .. } => items.iter_mut().for_each(|x| self.expr(x)),
            Expr::Call { receiver, args, .. } => {
                if let Some(r) = receiver {
                    self.expr(r);
                }
                args.iter_mut().for_each(|x| self.expr(x));
            }
            Expr::Field { target, .. } => self.expr(target),
            Expr::Unary { expr, .. } => self.expr(expr),
            Expr::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            _ => {}
        }
    }
}

fn mutate_expr(e: &mut Expr) {
    match e {
        Expr::Binary { op, .. } => {
            *op = match *op {
                BinOp::Add => BinOp::Sub,
                BinOp::Sub => BinOp::Add,
                BinOp::Mul => BinOp::Div,
                BinOp::Div => BinOp::Mul,
                BinOp::Rem => BinOp::Mul,
                BinOp::Lt => BinOp::Le,
                BinOp::Le => BinOp::Lt,
                BinOp::Gt => BinOp::Ge,
                BinOp::Ge => BinOp::Gt,
                BinOp::Eq => BinOp::Ne,
                BinOp::Ne => BinOp::Eq,
                other => other,
            }
        }
        Expr::Unary { op: UnOp::Neg, expr } => *e = (**expr).clone(),
        Expr::Int(n) => *n = n.wrapping_add(1),
        Expr::Float(x) => *x += 1.0,
        Expr::Bool(b) => *b = !*b,
        _ => {}
    }
}

fn walk(project: &ParsedProject, target: Option<usize>) -> (Walker, Vec<(String, Vec<ClassDecl>)>) {
    let mut w = Walker {
        target,
        seen: 0,
        sites: Vec::new(),
        method: String::new(),
        stmt: 0,
        expr: 0,
        applied: false,
    };
    let mut touched = Vec::new();
    for file in project.files.iter().filter(|f| !f.is_test()) {
        let mut decls = file.decls();
        for (decl, model) in decls.iter_mut().zip(&file.classes) {
            w.class(decl, model);
        }
        if w.applied && touched.is_empty() {
            touched.push((file.path.clone(), decls));
        }
    }
    (w, touched)
}

/// Every mutable site of the production code, in pre-order.
pub fn mutation_sites(project: &ParsedProject) -> Vec<MutationSite> {
    walk(project, None).0.sites
}

/// Mutant `seed` of `tree`. Seeds index a ChaCha-shuffled order of all sites,
/// so consecutive seeds visit distinct sites until the order is exhausted.
pub fn generate_mutant(tree: &SourceTree, seed: u64) -> Result<MutatedRevision> {
    let project = ParsedProject::parse(tree)?;
    let sites = mutation_sites(&project);
    if sites.is_empty() {
        return Err(Error::NoMutableSite);
    }
    let n = sites.len() as u64;
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5e1e_7110 ^ (seed / n)));
    let index = order[(seed % n) as usize];

    let (_, touched) = walk(&project, Some(index));
    let (path, decls) = touched.into_iter().next().expect("site index within range");
    let mut out = tree.clone();
    out.insert(path, print_classes(&decls));
    ParsedProject::parse(&out)?;
    Ok(MutatedRevision {
        base_revision: crate::fingerprint::ChecksumStore::from_project(&project).revision_id,
        site: sites[index].clone(),
        seed,
        tree: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::{compute_changes, ChecksumStore};

    fn checksums(tree: &SourceTree) -> ChecksumStore {
        ChecksumStore::from_project(&ParsedProject::parse(tree).unwrap())
    }

    fn tree() -> SourceTree {
        SourceTree::from_files([
            ("src/A.mj", "class A { int f(int x) { int y = x + 1; if (y < 3) { y = -y; } return y * 2; } }"),
            ("tests/T.mj", "class T { @Test void t() { assertEq(4, new A().f(1)); } }"),
        ])
    }

    #[test]
    fn sites_cover_each_operator() {
        let p = ParsedProject::parse(&tree()).unwrap();
        let sites = mutation_sites(&p);
        let count = |op| sites.iter().filter(|s| s.op == op).count();
        assert_eq!(count(MutationOp::ArithmeticOpReplace), 3);
        assert_eq!(count(MutationOp::RelationalOpReplace), 1);
        assert_eq!(count(MutationOp::ConstantReplace), 3);
        assert_eq!(count(MutationOp::StatementDelete), 1);
        assert!(sites.iter().all(|s| s.method == "A.f(int)"));
    }

    #[test]
    fn every_mutant_changes_exactly_one_method() {
        let base = tree();
        for seed in 0..8 {
            let m = generate_mutant(&base, seed).unwrap();
            let delta = compute_changes(Some(&checksums(&base)), &checksums(&m.tree));
            assert_eq!(delta.methods.keys().collect::<Vec<_>>(), ["A.f(int)"], "{:?}", m.site);
            assert!(delta.classes.is_empty());
        }
    }

    #[test]
    fn mutants_are_deterministic() {
        let a = generate_mutant(&tree(), 5).unwrap();
        let b = generate_mutant(&tree(), 5).unwrap();
        assert_eq!((a.site, a.tree), (b.site, b.tree));
    }

    #[test]
    fn no_site_is_an_error() {
        let t = SourceTree::from_files([("src/A.mj", "class A { void f() { } }")]);
        assert!(matches!(generate_mutant(&t, 0), Err(Error::NoMutableSite)));
    }
}
