//! Reader and writer for the sentinel-delimited patch log.
//!
//! Each commit starts with one header line
//!
//! ```text
//! \x01COMMIT\x01<hash>\x01<parents>\x01<name>\x01<email>\x01<unix ts>\x01
//! ```
//!
//! followed by ordinary `git diff` output up to the next header. The header
//! is what [`GIT_LOG_FORMAT`] produces.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::author::AuthorId;
use crate::error::{Error, Result};

use super::{is_commit_hash, CommitRecord, FileDiff};

/// `--format` argument that makes `git log -p` emit this layout.
pub const GIT_LOG_FORMAT: &str = "%x01COMMIT%x01%H%x01%P%x01%an%x01%ae%x01%at%x01";

const SENTINEL: &[u8] = b"\x01COMMIT\x01";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseWarning {
    pub commit: String,
    pub path: String,
    /// Byte offset of the offending line.
    pub offset: u64,
    pub message: String,
}

impl std::fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "commit {} {} (byte {}): {}", self.commit, self.path, self.offset, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParsedLog {
    pub commits: Vec<CommitRecord>,
    pub warnings: Vec<ParseWarning>,
}

struct Hunk {
    old_left: u64,
    new_left: u64,
}

struct FileState {
    diff: FileDiff,
    hunk: Option<Hunk>,
    seen_hunk: bool,
    skip: bool,
}

struct Parser {
    repo_id: String,
    out: ParsedLog,
    seen: HashSet<String>,
    commit: Option<CommitRecord>,
    file: Option<FileState>,
}

/// Parses a raw patch log into commit records (ordinals unset).
///
/// A damaged hunk drops only the file it belongs to and leaves a warning;
/// a damaged header is fatal.
pub fn parse_git_stream<R: BufRead>(repo_id: &str, mut reader: R) -> Result<ParsedLog> {
    let mut p = Parser {
        repo_id: repo_id.to_owned(),
        out: ParsedLog::default(),
        seen: HashSet::new(),
        commit: None,
        file: None,
    };
    let mut buf = Vec::new();
    let mut offset = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        let mut line: &[u8] = &buf;
        if line.last() == Some(&b'\n') {
            line = &line[..line.len() - 1];
        }
        p.line(line, offset)?;
        offset += n as u64;
    }
    p.finish_commit(offset);
    Ok(p.out)
}

impl Parser {
    fn line(&mut self, line: &[u8], offset: u64) -> Result<()> {
        if line.starts_with(SENTINEL) {
            self.finish_commit(offset);
            let commit = self.header(line, offset)?;
            self.commit = Some(commit);
            return Ok(());
        }
        if self.commit.is_none() {
            if line.iter().all(|b| b.is_ascii_whitespace()) {
                return Ok(());
            }
            return Err(Error::Header {
                offset,
                reason: "content before the first commit header".into(),
            });
        }
        if line.starts_with(b"diff --git ") {
            self.finish_file(offset);
            let path = path_from_diff_git(&String::from_utf8_lossy(&line[11..]));
            self.file = Some(FileState {
                diff: FileDiff::new(path),
                hunk: None,
                seen_hunk: false,
                skip: false,
            });
            return Ok(());
        }
        if line.starts_with(b"diff --cc ") || line.starts_with(b"diff --combined ") {
            // combined merge diff: skip the section
            self.finish_file(offset);
            self.file = Some(FileState {
                diff: FileDiff::new(String::new()),
                hunk: None,
                seen_hunk: false,
                skip: true,
            });
            return Ok(());
        }
        let Some(file) = self.file.as_mut() else {
            // commit message or other preamble between header and first diff
            return Ok(());
        };
        if file.skip {
            return Ok(());
        }
        if let Some(h) = file.hunk.as_mut() {
            let marker = line.first().copied();
            let ok = match marker {
                Some(b'+') => take(&mut h.new_left),
                Some(b'-') => take(&mut h.old_left),
                Some(b' ') | None => take(&mut h.old_left) && take(&mut h.new_left),
                Some(b'\\') => true,
                _ => false,
            };
            if !ok {
                self.abort_file(offset, "hunk line outside the declared ranges");
                return Ok(());
            }
            let text = || String::from_utf8_lossy(&line[1..]).into_owned();
            match marker {
                Some(b'+') => file.diff.added_lines.push(text()),
                Some(b'-') => file.diff.deleted_lines.push(text()),
                _ => {}
            }
            if h.old_left == 0 && h.new_left == 0 {
                file.hunk = None;
            }
            return Ok(());
        }
        if line.starts_with(b"@@ ") {
            match parse_hunk_header(line) {
                Some(h) => {
                    file.seen_hunk = true;
                    if h.old_left > 0 || h.new_left > 0 {
                        file.hunk = Some(h);
                    }
                }
                None => self.abort_file(offset, "unparseable hunk header"),
            }
            return Ok(());
        }
        if !file.seen_hunk {
            if line.starts_with(b"+++ ") || line.starts_with(b"--- ") {
                if let Some(p) = header_path(&line[4..]) {
                    file.diff.path = p;
                }
            } else if line.starts_with(b"Binary files ") || line.starts_with(b"GIT binary patch") {
                file.skip = true;
                file.diff.added_lines.clear();
                file.diff.deleted_lines.clear();
            }
            // other extended headers (index, mode, similarity) carry nothing we use
            return Ok(());
        }
        match line.first() {
            None => Ok(()),
            Some(b'\\') => Ok(()),
            Some(b'+' | b'-' | b' ') => {
                self.abort_file(offset, "hunk line outside the declared ranges");
                Ok(())
            }
            _ => {
                self.abort_file(offset, "unexpected line after hunk");
                Ok(())
            }
        }
    }

    fn header(&mut self, line: &[u8], offset: u64) -> Result<CommitRecord> {
        let text = String::from_utf8_lossy(line);
        let bad = |reason: &str| Error::Header {
            offset,
            reason: reason.to_owned(),
        };
        let fields: Vec<&str> = text.split('\x01').collect();
        // "", "COMMIT", hash, parents, name, email, ts, ""
        if fields.len() != 8 || !fields[7].trim_end_matches('\r').is_empty() {
            return Err(bad("truncated commit header"));
        }
        let hash = fields[2].to_ascii_lowercase();
        if !is_commit_hash(&hash) {
            return Err(bad("commit hash is not 40 hex digits"));
        }
        let parents: Vec<String> = fields[3]
            .split_ascii_whitespace()
            .map(str::to_ascii_lowercase)
            .collect();
        if parents.iter().any(|p| !is_commit_hash(p)) {
            return Err(bad("parent hash is not 40 hex digits"));
        }
        let ts: i64 = fields[6]
            .trim()
            .parse()
            .map_err(|_| bad("author timestamp is not an integer"))?;
        if !self.seen.insert(hash.clone()) {
            return Err(Error::DuplicateCommit {
                repo: self.repo_id.clone(),
                hash,
            });
        }
        Ok(CommitRecord::new(
            self.repo_id.clone(),
            hash,
            parents,
            AuthorId::new(fields[4], fields[5]),
            ts,
        ))
    }

    fn abort_file(&mut self, offset: u64, message: &str) {
        if let (Some(file), Some(commit)) = (self.file.take(), self.commit.as_ref()) {
            self.out.warnings.push(ParseWarning {
                commit: commit.hash.clone(),
                path: file.diff.path,
                offset,
                message: message.to_owned(),
            });
        }
        // keep swallowing the rest of this file's section
        self.file = Some(FileState {
            diff: FileDiff::new(String::new()),
            hunk: None,
            seen_hunk: false,
            skip: true,
        });
    }

    fn finish_file(&mut self, offset: u64) {
        let Some(file) = self.file.take() else {
            return;
        };
        if file.skip {
            return;
        }
        if file.hunk.is_some() {
            self.file = Some(file);
            self.abort_file(offset, "hunk truncated before its declared length");
            self.file = None;
            return;
        }
        if let Some(commit) = self.commit.as_mut() {
            commit.diffs.push(file.diff);
        }
    }

    fn finish_commit(&mut self, offset: u64) {
        self.finish_file(offset);
        if let Some(c) = self.commit.take() {
            self.out.commits.push(c);
        }
    }
}

fn take(left: &mut u64) -> bool {
    if *left == 0 {
        false
    } else {
        *left -= 1;
        true
    }
}

/// `@@ -a[,b] +c[,d] @@ ...`
fn parse_hunk_header(line: &[u8]) -> Option<Hunk> {
    let text = std::str::from_utf8(line).ok()?;
    let rest = text.strip_prefix("@@ -")?;
    let end = rest.find(" @@")?;
    let (old, new) = rest[..end].split_once(" +")?;
    let count = |range: &str| -> Option<u64> {
        match range.split_once(',') {
            Some((start, len)) => {
                start.parse::<u64>().ok()?;
                len.parse().ok()
            }
            None => {
                range.parse::<u64>().ok()?;
                Some(1)
            }
        }
    };
    Some(Hunk {
        old_left: count(old)?,
        new_left: count(new)?,
    })
}

fn header_path(raw: &[u8]) -> Option<String> {
    let text = String::from_utf8_lossy(raw);
    let text = text.trim_end_matches(['\r', '\t']);
    if text == "/dev/null" {
        return None;
    }
    let text = text.strip_prefix('"').and_then(|t| t.strip_suffix('"')).unwrap_or(text);
    let path = text
        .strip_prefix("a/")
        .or_else(|| text.strip_prefix("b/"))
        .unwrap_or(text);
    Some(path.to_owned())
}

fn path_from_diff_git(rest: &str) -> String {
    let rest = rest.trim_end_matches('\r');
    // "a/P b/P": when both sides agree the split point is the middle
    if rest.len() % 2 == 1 {
        let mid = rest.len() / 2;
        if rest.is_char_boundary(mid) && rest.is_char_boundary(mid + 1) {
            let (a, b) = (&rest[..mid], &rest[mid + 1..]);
            if let (Some(a), Some(b)) = (a.strip_prefix("a/"), b.strip_prefix("b/")) {
                if a == b {
                    return b.to_owned();
                }
            }
        }
    }
    match rest.rfind(" b/") {
        Some(i) => rest[i + 3..].to_owned(),
        None => rest.to_owned(),
    }
}

/// Writes commits back out in the same layout `parse_git_stream` reads.
///
/// Each file becomes a single hunk holding its deletions then its additions,
/// which is all the information a [`FileDiff`] retains.
pub fn write_git_stream<W: Write>(commits: &[CommitRecord], mut out: W) -> std::io::Result<()> {
    for c in commits {
        write!(
            out,
            "\x01COMMIT\x01{}\x01{}\x01{}\x01{}\x01{}\x01\n\n",
            c.hash,
            c.parent_hashes.join(" "),
            c.author.name,
            c.author.email,
            c.author_ts
        )?;
        for d in &c.diffs {
            writeln!(out, "diff --git a/{0} b/{0}", d.path)?;
            writeln!(out, "--- a/{}", d.path)?;
            writeln!(out, "+++ b/{}", d.path)?;
            let (del, add) = (d.deleted_lines.len(), d.added_lines.len());
            if del + add == 0 {
                continue;
            }
            let old_start = if del == 0 { 0 } else { 1 };
            let new_start = if add == 0 { 0 } else { 1 };
            writeln!(out, "@@ -{old_start},{del} +{new_start},{add} @@")?;
            for l in &d.deleted_lines {
                writeln!(out, "-{l}")?;
            }
            for l in &d.added_lines {
                writeln!(out, "+{l}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &str = "1111111111111111111111111111111111111111";
    const C: &str = "2222222222222222222222222222222222222222";

    fn header(hash: &str, parents: &str, ts: i64) -> String {
        format!("\x01COMMIT\x01{hash}\x01{parents}\x01Ann\x01ann@x.org\x01{ts}\x01\n")
    }

    #[test]
    fn two_commit_stream() {
        let mut s = header(C, P, 20);
        s += "\ndiff --git a/m.py b/m.py\nindex 1..2 100644\n--- a/m.py\n+++ b/m.py\n@@ -1,2 +1,2 @@\n import os\n-import math\n+import numpy as np\n";
        s += &header(P, "", 10);
        s += "\ndiff --git a/m.py b/m.py\nnew file mode 100644\n--- /dev/null\n+++ b/m.py\n@@ -0,0 +1,2 @@\n+import os\n+import math\n";
        let log = parse_git_stream("r", s.as_bytes()).unwrap();
        assert!(log.warnings.is_empty(), "{:?}", log.warnings);
        assert_eq!(log.commits.len(), 2);
        let child = &log.commits[0];
        assert_eq!(child.parent_hashes, vec![P.to_owned()]);
        assert_eq!(child.diffs[0].added_lines, vec!["import numpy as np"]);
        assert_eq!(child.diffs[0].deleted_lines, vec!["import math"]);
        assert!(!child.is_merge);
        assert_eq!(log.commits[1].diffs[0].path, "m.py");
        assert_eq!(log.commits[1].diffs[0].added_lines.len(), 2);
    }

    #[test]
    fn merge_flagged() {
        let s = header(C, &format!("{P} {}", "3".repeat(40)), 5);
        let log = parse_git_stream("r", s.as_bytes()).unwrap();
        assert!(log.commits[0].is_merge);
        assert_eq!(log.commits[0].parent_hashes.len(), 2);
    }

    #[test]
    fn truncated_header_reports_offset() {
        let mut s = header(P, "", 1);
        let off = s.len() as u64;
        s += "\x01COMMIT\x01";
        s += C;
        s += "\x01\x01Bob\n";
        match parse_git_stream("r", s.as_bytes()) {
            Err(Error::Header { offset, .. }) => assert_eq!(offset, off),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_hash_rejected() {
        let s = header(P, "", 1) + &header(P, "", 2);
        assert!(matches!(
            parse_git_stream("r", s.as_bytes()),
            Err(Error::DuplicateCommit { .. })
        ));
    }

    #[test]
    fn malformed_hunk_drops_only_that_file() {
        let mut s = header(P, "", 1);
        s += "diff --git a/a.py b/a.py\n--- a/a.py\n+++ b/a.py\n@@ -1,1 +1,1 @@\n-x\n+y\n+z\n";
        s += "diff --git a/b.py b/b.py\n--- a/b.py\n+++ b/b.py\n@@ -0,0 +1 @@\n+import os\n";
        let log = parse_git_stream("r", s.as_bytes()).unwrap();
        assert_eq!(log.warnings.len(), 1);
        assert_eq!(log.warnings[0].path, "a.py");
        let paths: Vec<_> = log.commits[0].diffs.iter().map(|d| d.path.as_str()).collect();
        assert_eq!(paths, ["b.py"]);
    }

    #[test]
    fn truncated_hunk_warns() {
        let mut s = header(P, "", 1);
        s += "diff --git a/a.py b/a.py\n--- a/a.py\n+++ b/a.py\n@@ -0,0 +1,3 @@\n+x\n";
        let log = parse_git_stream("r", s.as_bytes()).unwrap();
        assert_eq!(log.warnings.len(), 1);
        assert!(log.commits[0].diffs.is_empty());
    }

    #[test]
    fn binary_and_deleted_files() {
        let mut s = header(P, "", 1);
        s += "diff --git a/img.png b/img.png\nnew file mode 100644\nindex 0..1\nBinary files /dev/null and b/img.png differ\n";
        s += "diff --git a/old.py b/old.py\ndeleted file mode 100644\n--- a/old.py\n+++ /dev/null\n@@ -1 +0,0 @@\n-import sys\n\\ No newline at end of file\n";
        let log = parse_git_stream("r", s.as_bytes()).unwrap();
        assert!(log.warnings.is_empty());
        let d = &log.commits[0].diffs;
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "old.py");
        assert_eq!(d[0].deleted_lines, vec!["import sys"]);
    }

    #[test]
    fn lossy_utf8_and_diff_lookalikes_inside_hunks() {
        let mut bytes = header(P, "", 1).into_bytes();
        bytes.extend_from_slice(b"diff --git a/a.py b/a.py\n--- a/a.py\n+++ b/a.py\n@@ -1,2 +1,1 @@\n--- not a header\n-caf\xe9\n+++ still content\n");
        let log = parse_git_stream("r", &bytes[..]).unwrap();
        let d = &log.commits[0].diffs[0];
        assert_eq!(d.deleted_lines, vec!["-- not a header", "caf\u{fffd}"]);
        assert_eq!(d.added_lines, vec!["++ still content"]);
    }

    #[test]
    fn paths_with_spaces() {
        assert_eq!(path_from_diff_git("a/my dir/x.py b/my dir/x.py"), "my dir/x.py");
        assert_eq!(path_from_diff_git("a/x.py b/y.py"), "y.py");
    }
}
