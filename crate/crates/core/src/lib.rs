//! Assertion-level regression test selection for MiniJ projects.

pub mod driver;
pub mod error;
pub mod fingerprint;
pub mod frontend;
pub mod harness;
pub mod instrument;
pub mod runtime;
pub mod select;
pub mod slicer;
pub mod tree;

pub use error::{Error, ParseError, Result};
pub use tree::SourceTree;
