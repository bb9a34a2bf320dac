//! Commit history ingestion: the raw patch-log reader/writer and the
//! parent-graph linearization that gives every commit its ordinal.

mod linearize;
mod rawlog;

use serde::{Deserialize, Serialize};

use crate::author::AuthorId;

pub use linearize::linearize;
pub use rawlog::{parse_git_stream, write_git_stream, ParseWarning, ParsedLog, GIT_LOG_FORMAT};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    /// Repository-relative path.
    pub path: String,
    /// Added line texts without the leading `+`.
    pub added_lines: Vec<String>,
    /// Deleted line texts without the leading `-`.
    pub deleted_lines: Vec<String>,
}

impl FileDiff {
    pub fn new(path: impl Into<String>) -> Self {
        FileDiff {
            path: path.into(),
            added_lines: Vec::new(),
            deleted_lines: Vec::new(),
        }
    }

    pub fn is_python(&self) -> bool {
        self.path.ends_with(".py")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub repo_id: String,
    pub hash: String,
    pub parent_hashes: Vec<String>,
    pub author: AuthorId,
    /// Author timestamp, unix seconds.
    pub author_ts: i64,
    pub is_merge: bool,
    pub diffs: Vec<FileDiff>,
    /// Position in the linearized history; `None` until [`linearize`] runs.
    pub ordinal: Option<u32>,
}

impl CommitRecord {
    pub fn new(
        repo_id: impl Into<String>,
        hash: impl Into<String>,
        parent_hashes: Vec<String>,
        author: AuthorId,
        author_ts: i64,
    ) -> Self {
        let is_merge = parent_hashes.len() >= 2;
        CommitRecord {
            repo_id: repo_id.into(),
            hash: hash.into(),
            parent_hashes,
            author,
            author_ts,
            is_merge,
            diffs: Vec::new(),
            ordinal: None,
        }
    }
}

pub(crate) fn is_commit_hash(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| b.is_ascii_hexdigit())
}
