use std::fmt;
use std::path::PathBuf;

/// A syntax error with its source position (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub path: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.path, self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("duplicate class `{name}` in {path}")]
    DuplicateClass { path: String, name: String },

    #[error("duplicate method `{0}`")]
    DuplicateMethod(String),

    #[error("class `{class}` extends unknown class `{superclass}`")]
    UnresolvedSuperclass { class: String, superclass: String },

    #[error("inheritance cycle through `{0}`")]
    InheritanceCycle(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed store file {path}: {message}")]
    Store { path: PathBuf, message: String },

    #[error("store version mismatch: found {found}, expected {expected}")]
    StoreVersion { found: String, expected: String },

    #[error("store not initialized at {0} (run `selertion init` first)")]
    NotInitialized(PathBuf),

    #[error("store already exists at {0} (use --force to overwrite)")]
    AlreadyInitialized(PathBuf),

    #[error("store is locked by another run ({0})")]
    Locked(PathBuf),

    #[error("instrumented copy missing at {0}; an initial run is required")]
    MissingCopy(PathBuf),

    #[error("trace marker imbalance: {0}")]
    MarkerImbalance(String),

    #[error("stale store: {0}")]
    Stale(String),

    #[error("slice invariant violated: {0}")]
    SliceInvariant(String),

    #[error("no backup for active rewrite: {0}")]
    MissingBackup(PathBuf),

    #[error("no mutable site in project")]
    NoMutableSite,

    #[error("invalid entity id `{0}`")]
    BadEntityId(String),

    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
