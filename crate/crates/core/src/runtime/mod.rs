//! Deterministic MiniJ execution: test runs, trace collection, dependency sets.

mod interp;
mod runner;
mod trace;
mod value;

pub use interp::{binary, Frame, Interp, Program, Raise, DEFAULT_STEP_LIMIT, TRACED};
pub use runner::{
    collect_dependencies, collect_tree, execute_tests, execute_tree, original_method_key, outcome_map,
    run_project, AssertionEvent, Outcome, RunOptions, TestOutcome, TestReport, TRACE_CLASS,
};
pub use trace::{DependencyDb, EntityId, TraceSink};
pub use value::{Object, Value};
