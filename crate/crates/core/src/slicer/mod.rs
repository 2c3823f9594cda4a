//! Assertion slices: each assertion of a sliceable test method together with
//! the statements it transitively data-depends on.

mod level;
mod pdg;
mod store;

pub use level::{
    classify_selectability, compute_levels, ClassLevels, Level, LevelReason, SelectionLevel,
};
pub use pdg::{build_pdg, mutated_locals, Pdg, Witness};
pub use store::SliceStore;

use crate::frontend::ast::Stmt;
use crate::frontend::model::{MethodModel, MethodSig};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AssertionSlice {
    pub method: MethodSig,
    pub assertion: usize,
    /// Statement ordinals in method order; the last one is `assertion`.
    pub statements: Vec<usize>,
    pub criterion_vars: BTreeSet<String>,
}

impl AssertionSlice {
    pub fn contains(&self, ordinal: usize) -> bool {
        self.statements.binary_search(&ordinal).is_ok()
    }
}

pub fn slice_assertions(method: &MethodModel, pdg: &Pdg) -> Vec<AssertionSlice> {
    method
        .body
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_assertion())
        .map(|(i, s)| AssertionSlice {
            method: method.signature.clone(),
            assertion: i,
            statements: pdg.backward_closure(i),
            criterion_vars: s.uses.clone(),
        })
        .collect()
}

/// Name of the generated test method for the `k`-th (1-based) slice of `method`.
pub fn slice_method_name(method: &str, k: usize) -> String {
    format!("{method}__slice{k}")
}

/// Body of a slice as a statement list.
pub fn slice_body(method: &MethodModel, slice: &AssertionSlice) -> Vec<Stmt> {
    slice
        .statements
        .iter()
        .map(|&i| method.decl.body[i].clone())
        .collect()
}
