//! Lexing, parsing and modelling of MiniJ sources.
//!
//! MiniJ is a small class-based language: single inheritance, fields,
//! constructors, enums, nested classes, annotations for test structure and
//! builtin assertions. Production code lives under `src/`, tests under `tests/`.

pub mod ast;
pub mod effects;
pub mod inventory;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod printer;
pub mod project;

pub use effects::EffectSummary;
pub use inventory::{enumerate_tests, TestClassInfo, TestFeatures, TestInventory, TestMethodInfo};
pub use model::{
    build_class_model, parse_source, ClassModel, MethodModel, MethodSig, SourceFile, Statement,
    StatementId, StmtKind,
};
pub use project::ParsedProject;
