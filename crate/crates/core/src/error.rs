use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Stream(#[from] io::Error),

    #[error("malformed commit header at byte offset {offset}: {reason}")]
    Header { offset: u64, reason: String },

    #[error("duplicate commit {hash} in repository {repo}")]
    DuplicateCommit { repo: String, hash: String },

    #[error("parent cycle through commit {hash}")]
    Cycle { hash: String },

    #[error("commit ordinal {got} presented after ordinal {last} in repository {repo}")]
    Sequencing { repo: String, last: u32, got: u32 },

    #[error("commit {hash} has no ordinal; linearize the repository first")]
    Unlinearized { hash: String },

    #[error("repository {0} is already present in the store")]
    DuplicateRepo(String),

    #[error("shard {shard} is missing ({path})")]
    MissingShard { shard: u32, path: PathBuf },

    #[error("shard {shard} is quarantined: unacknowledged bytes after offset {offset}")]
    QuarantinedShard { shard: u32, offset: u64 },

    #[error("store format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt store: {0}")]
    CorruptStore(String),

    #[error("unknown repository {0}")]
    UnknownRepo(String),

    #[error("invalid adoption of {library} in {repo}: initial LOC {initial_loc} is not positive")]
    InvalidAdoption {
        repo: String,
        library: String,
        initial_loc: i64,
    },

    #[error("epsilon {0} is outside the open interval (0, 1)")]
    InvalidEpsilon(f64),

    #[error("author {0} is missing from the experience table")]
    MissingExperience(String),

    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
