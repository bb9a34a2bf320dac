//! Sharded JSON Lines store of mined library events.
//!
//! Layout of a store directory:
//!
//! ```text
//! store.json          manifest: shards, byte lengths, per-repo placement
//! events-<k>.jsonl    one LibraryEvent per line
//! commits-<k>.jsonl   one commit-index entry per line
//! ```
//!
//! Appends write shard bytes first and publish them by atomically replacing
//! `store.json`; bytes past a shard's acknowledged length are an interrupted
//! write and quarantine the shard.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::author::AuthorKey;
use crate::error::{Error, Result};
use crate::imports::LibraryEvent;

pub const STORE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SHARD_CAP: u64 = 5_000_000;
const MANIFEST: &str = "store.json";

/// Commit-index entry: what analytics needs to know about every commit,
/// including those that touch no library.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMeta {
    #[serde(rename = "ord")]
    pub ordinal: u32,
    pub hash: String,
    pub author: AuthorKey,
    pub ts: i64,
    pub merge: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepoData {
    pub repo_id: String,
    pub events: Vec<LibraryEvent>,
    pub commits: Vec<CommitMeta>,
}

#[derive(Serialize, Deserialize)]
struct CommitLine<'a> {
    repo: std::borrow::Cow<'a, str>,
    #[serde(flatten)]
    meta: std::borrow::Cow<'a, CommitMeta>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ShardEntry {
    id: u32,
    events_file: String,
    commits_file: String,
    events_bytes: u64,
    commits_bytes: u64,
    records: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoEntry {
    pub repo: String,
    pub shard: u32,
    pub events: u64,
    pub commits: u64,
    event_offset: u64,
    event_len: u64,
    commit_offset: u64,
    commit_len: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    shard_cap: u64,
    shards: Vec<ShardEntry>,
    repos: Vec<RepoEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quarantine {
    pub shard: u32,
    /// Length of the acknowledged prefix; everything after it is suspect.
    pub offset: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ScanFilter {
    #[default]
    All,
    Repo(String),
    Library(String),
}

pub struct EventStore {
    dir: PathBuf,
    manifest: Manifest,
    quarantined: Vec<Quarantine>,
}

impl EventStore {
    pub fn create(dir: impl AsRef<Path>, shard_cap: u64) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        if dir.join(MANIFEST).exists() {
            return Err(Error::InvalidInput(format!(
                "{} already holds a store",
                dir.display()
            )));
        }
        let store = EventStore {
            dir,
            manifest: Manifest {
                format_version: STORE_FORMAT_VERSION,
                shard_cap: shard_cap.max(1),
                shards: Vec::new(),
                repos: Vec::new(),
            },
            quarantined: Vec::new(),
        };
        store.publish()?;
        Ok(store)
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let version = serde_json::from_str::<serde_json::Value>(&text)?
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::CorruptStore("manifest lacks format_version".into()))?;
        if version != STORE_FORMAT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                found: version as u32,
                expected: STORE_FORMAT_VERSION,
            });
        }
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mut quarantined = Vec::new();
        for s in &manifest.shards {
            for (file, acked) in [(&s.events_file, s.events_bytes), (&s.commits_file, s.commits_bytes)] {
                let Ok(meta) = fs::metadata(dir.join(file)) else {
                    continue; // reported when the shard is read
                };
                if meta.len() > acked {
                    quarantined.push(Quarantine {
                        shard: s.id,
                        offset: acked,
                    });
                    break;
                }
                if meta.len() < acked {
                    return Err(Error::CorruptStore(format!(
                        "{file} is {} bytes, manifest acknowledges {acked}",
                        meta.len()
                    )));
                }
            }
        }
        Ok(EventStore {
            dir,
            manifest,
            quarantined,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn shard_count(&self) -> usize {
        self.manifest.shards.len()
    }

    pub fn repos(&self) -> &[RepoEntry] {
        &self.manifest.repos
    }

    pub fn quarantined(&self) -> &[Quarantine] {
        &self.quarantined
    }

    pub fn contains(&self, repo_id: &str) -> bool {
        self.manifest.repos.iter().any(|r| r.repo == repo_id)
    }

    /// Appends a repository to the open shard, starting a new shard when the
    /// record cap would be exceeded. A repository never spans shards.
    pub fn append_repo(&mut self, repo: &RepoData) -> Result<u32> {
        let n = repo.events.len() as u64;
        let cap = self.manifest.shard_cap;
        let target = self
            .manifest
            .shards
            .iter()
            .rev()
            .find(|s| !self.is_quarantined(s.id))
            .filter(|s| n == 0 || s.records == 0 || s.records + n <= cap)
            .map(|s| s.id)
            .unwrap_or(self.manifest.shards.len() as u32);
        self.append_repo_to(target, repo)?;
        Ok(target)
    }

    /// Appends a repository to a specific shard; `shard` may name the next
    /// unused shard id to open it.
    pub fn append_repo_to(&mut self, shard: u32, repo: &RepoData) -> Result<()> {
        if self.contains(&repo.repo_id) {
            return Err(Error::DuplicateRepo(repo.repo_id.clone()));
        }
        if self.is_quarantined(shard) {
            return Err(Error::QuarantinedShard {
                shard,
                offset: self.quarantined.iter().find(|q| q.shard == shard).unwrap().offset,
            });
        }
        validate(repo)?;
        let next = self.manifest.shards.len() as u32;
        if shard > next {
            return Err(Error::InvalidInput(format!("shard {shard} skips past {next}")));
        }
        if shard == next {
            self.manifest.shards.push(ShardEntry {
                id: shard,
                events_file: format!("events-{shard}.jsonl"),
                commits_file: format!("commits-{shard}.jsonl"),
                events_bytes: 0,
                commits_bytes: 0,
                records: 0,
            });
        }

        let mut events_buf = Vec::new();
        for e in &repo.events {
            serde_json::to_writer(&mut events_buf, e)?;
            events_buf.push(b'\n');
        }
        let mut commits_buf = Vec::new();
        for c in &repo.commits {
            serde_json::to_writer(
                &mut commits_buf,
                &CommitLine {
                    repo: repo.repo_id.as_str().into(),
                    meta: std::borrow::Cow::Borrowed(c),
                },
            )?;
            commits_buf.push(b'\n');
        }

        let entry = &self.manifest.shards[shard as usize];
        let event_offset = entry.events_bytes;
        let commit_offset = entry.commits_bytes;
        append_at(&self.dir.join(&entry.events_file), event_offset, &events_buf)?;
        append_at(&self.dir.join(&entry.commits_file), commit_offset, &commits_buf)?;

        let entry = &mut self.manifest.shards[shard as usize];
        entry.events_bytes += events_buf.len() as u64;
        entry.commits_bytes += commits_buf.len() as u64;
        entry.records += repo.events.len() as u64;
        self.manifest.repos.push(RepoEntry {
            repo: repo.repo_id.clone(),
            shard,
            events: repo.events.len() as u64,
            commits: repo.commits.len() as u64,
            event_offset,
            event_len: events_buf.len() as u64,
            commit_offset,
            commit_len: commits_buf.len() as u64,
        });
        self.publish()
    }

    /// Reads back everything stored for one repository.
    pub fn repo(&self, repo_id: &str) -> Result<RepoData> {
        let entry = self
            .manifest
            .repos
            .iter()
            .find(|r| r.repo == repo_id)
            .ok_or_else(|| Error::UnknownRepo(repo_id.to_owned()))?;
        self.load(entry)
    }

    pub fn load(&self, entry: &RepoEntry) -> Result<RepoData> {
        Ok(RepoData {
            repo_id: entry.repo.clone(),
            events: self.read_events(entry)?,
            commits: self.read_commits(entry)?,
        })
    }

    pub fn read_events(&self, entry: &RepoEntry) -> Result<Vec<LibraryEvent>> {
        let shard = &self.manifest.shards[entry.shard as usize];
        self.read_lines(entry.shard, &shard.events_file, entry.event_offset, entry.event_len)?
            .into_iter()
            .map(|l| Ok(serde_json::from_str(&l)?))
            .collect()
    }

    pub fn read_commits(&self, entry: &RepoEntry) -> Result<Vec<CommitMeta>> {
        let shard = &self.manifest.shards[entry.shard as usize];
        self.read_lines(entry.shard, &shard.commits_file, entry.commit_offset, entry.commit_len)?
            .into_iter()
            .map(|l| {
                let line: CommitLine = serde_json::from_str(&l)?;
                Ok(line.meta.into_owned())
            })
            .collect()
    }

    /// Streams events in manifest order of repositories, ordinal order
    /// within each.
    pub fn scan(&self, filter: ScanFilter) -> Scan<'_> {
        Scan {
            store: self,
            filter,
            next_repo: 0,
            buffer: Vec::new().into_iter(),
        }
    }

    fn read_lines(&self, shard: u32, file: &str, offset: u64, len: u64) -> Result<Vec<String>> {
        let path = self.dir.join(file);
        let mut f = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingShard { shard, path })
            }
            Err(e) => return Err(Error::io(&path, e)),
        };
        f.seek(SeekFrom::Start(offset)).map_err(|e| Error::io(&path, e))?;
        let reader = BufReader::new(f.take(len));
        let lines: std::io::Result<Vec<String>> = reader.lines().collect();
        lines.map_err(|e| Error::io(&path, e))
    }

    fn is_quarantined(&self, shard: u32) -> bool {
        self.quarantined.iter().any(|q| q.shard == shard)
    }

    fn publish(&self) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)
    }
}

pub struct Scan<'a> {
    store: &'a EventStore,
    filter: ScanFilter,
    next_repo: usize,
    buffer: std::vec::IntoIter<LibraryEvent>,
}

impl Iterator for Scan<'_> {
    type Item = Result<LibraryEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(e) = self.buffer.next() {
                return Some(Ok(e));
            }
            let entry = self.store.manifest.repos.get(self.next_repo)?;
            self.next_repo += 1;
            if let ScanFilter::Repo(r) = &self.filter {
                if &entry.repo != r {
                    continue;
                }
            }
            let mut events = match self.store.read_events(entry) {
                Ok(v) => v,
                Err(e) => {
                    self.next_repo = usize::MAX;
                    return Some(Err(e));
                }
            };
            if let ScanFilter::Library(lib) = &self.filter {
                events.retain(|e| &e.library == lib);
            }
            self.buffer = events.into_iter();
        }
    }
}

fn validate(repo: &RepoData) -> Result<()> {
    let mut last = None;
    for e in &repo.events {
        if e.repo_id != repo.repo_id {
            return Err(Error::InvalidInput(format!(
                "event for {} appended under {}",
                e.repo_id, repo.repo_id
            )));
        }
        if last.is_some_and(|l| e.ordinal < l) {
            return Err(Error::InvalidInput(format!(
                "events of {} are not in ordinal order",
                repo.repo_id
            )));
        }
        last = Some(e.ordinal);
    }
    Ok(())
}

fn append_at(path: &Path, offset: u64, bytes: &[u8]) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let len = f.metadata().map_err(|e| Error::io(path, e))?.len();
    if len != offset {
        return Err(Error::CorruptStore(format!(
            "{} is {len} bytes, expected {offset}",
            path.display()
        )));
    }
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.sync_data().map_err(|e| Error::io(path, e))
}

/// Writes to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_data().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
