//! Stack Overflow posts-dump ingestion and usage correlation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imports::{extract_import, LibraryEvent};
use crate::par::{self, Execution};
use crate::stats::{least_squares, Regression};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SoPost {
    pub id: u64,
    pub code_blocks: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PostsDump {
    pub posts: Vec<SoPost>,
    /// `<row>` elements seen, kept or not.
    pub rows: u64,
    pub malformed: u64,
}

/// Reads a posts dump, keeping Python-tagged questions.
///
/// The dump is processed one line at a time; each `<row .../>` line is
/// parsed independently so a broken row costs only itself.
pub fn parse_posts_dump<R: BufRead>(reader: R) -> Result<PostsDump> {
    let mut dump = PostsDump::default();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if !line.starts_with("<row") {
            continue;
        }
        dump.rows += 1;
        match parse_row(line) {
            Some(Some(post)) => dump.posts.push(post),
            Some(None) => {}
            None => dump.malformed += 1,
        }
    }
    Ok(dump)
}

/// `None` for a malformed row, `Some(None)` for a row that is filtered out.
fn parse_row(line: &str) -> Option<Option<SoPost>> {
    let mut reader = Reader::from_str(line);
    let start = match reader.read_event().ok()? {
        Event::Empty(e) | Event::Start(e) => e,
        _ => return None,
    };
    if start.name().as_ref() != b"row" {
        return None;
    }
    let (mut id, mut kind, mut tags, mut body) = (None, None, None, None);
    for attr in start.attributes() {
        let attr = attr.ok()?;
        let value = attr.unescape_value().ok()?;
        match attr.key.as_ref() {
            b"Id" => id = Some(value.parse::<u64>().ok()?),
            b"PostTypeId" => kind = Some(value.into_owned()),
            b"Tags" => tags = Some(value.into_owned()),
            b"Body" => body = Some(value.into_owned()),
            _ => {}
        }
    }
    let (id, kind) = (id?, kind?);
    if kind != "1" || !tags.as_deref().is_some_and(has_python_tag) {
        return Some(None);
    }
    Some(Some(SoPost {
        id,
        code_blocks: code_blocks(body.as_deref().unwrap_or("")),
    }))
}

/// Accepts both `<python><pandas>` and `|python|pandas|` tag encodings.
pub fn has_python_tag(tags: &str) -> bool {
    tags.split(['<', '>', '|'])
        .any(|t| t == "python" || t.starts_with("python-"))
}

/// Unescaped text of every `<code>` element in an HTML body.
pub fn code_blocks(html: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = html;
    while let Some(open) = rest.find("<code") {
        let after = &rest[open + 5..];
        if !after.starts_with(['>', ' ', '\t', '\n']) {
            rest = after;
            continue;
        }
        let Some(gt) = after.find('>') else { break };
        let inner = &after[gt + 1..];
        let Some(close) = inner.find("</code>") else { break };
        out.push(unescape_html(&inner[..close]));
        rest = &inner[close + 7..];
    }
    out
}

/// Decodes the common named entities and numeric references; anything
/// unrecognized is kept verbatim.
pub fn unescape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let decoded = tail.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let name = &tail[1..semi];
            let c = match name {
                "lt" => Some('<'),
                "gt" => Some('>'),
                "amp" => Some('&'),
                "quot" => Some('"'),
                "apos" | "#39" => Some('\''),
                "nbsp" => Some(' '),
                _ => name
                    .strip_prefix("#x")
                    .or_else(|| name.strip_prefix("#X"))
                    .map(|h| u32::from_str_radix(h, 16))
                    .or_else(|| name.strip_prefix('#').map(|d| d.parse::<u32>()))
                    .and_then(|r| r.ok())
                    .and_then(char::from_u32),
            };
            c.map(|c| (c, semi + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &tail[len..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LibraryClass {
    Standard,
    Pypi,
    Other,
}

impl LibraryClass {
    pub const ALL: [LibraryClass; 3] = [LibraryClass::Standard, LibraryClass::Pypi, LibraryClass::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            LibraryClass::Standard => "standard",
            LibraryClass::Pypi => "pypi",
            LibraryClass::Other => "other",
        }
    }

    /// R² published for this class on the full-scale corpus, reported
    /// alongside local fits for comparison.
    pub fn reference_r_squared(self) -> f64 {
        match self {
            LibraryClass::Standard => 0.625,
            LibraryClass::Pypi => 0.410,
            LibraryClass::Other => 0.08,
        }
    }
}

impl fmt::Display for LibraryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LibraryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LibraryClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("library class {s:?}")))
    }
}

/// Membership lists for the standard library and PyPI.
#[derive(Clone, Debug, Default)]
pub struct LibraryClassifier {
    standard: BTreeSet<String>,
    pypi: BTreeSet<String>,
}

fn pypi_key(name: &str) -> String {
    name.to_ascii_lowercase().replace(['-', '.'], "_")
}

fn read_names(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl LibraryClassifier {
    pub fn new(standard_names: &str, pypi_names: &str) -> Self {
        LibraryClassifier {
            standard: read_names(standard_names).map(str::to_owned).collect(),
            pypi: read_names(pypi_names).map(pypi_key).collect(),
        }
    }

    pub fn load(standard: &Path, pypi: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(standard).map_err(|e| Error::io(standard, e))?;
        let p = std::fs::read_to_string(pypi).map_err(|e| Error::io(pypi, e))?;
        Ok(Self::new(&s, &p))
    }

    /// Standard-library membership wins over PyPI. PyPI names match
    /// case-insensitively with `-`, `.` and `_` treated alike.
    pub fn classify(&self, library: &str) -> LibraryClass {
        if self.standard.contains(library) {
            LibraryClass::Standard
        } else if self.pypi.contains(&pypi_key(library)) {
            LibraryClass::Pypi
        } else {
            LibraryClass::Other
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SoLibraryCount {
    pub library: String,
    pub post_count: u64,
    pub class: LibraryClass,
}

fn strip_prompt(line: &str) -> &str {
    let t = line.trim_start();
    t.strip_prefix(">>> ")
        .or_else(|| t.strip_prefix("... "))
        .or_else(|| if t == ">>>" || t == "..." { Some("") } else { None })
        .unwrap_or(line)
}

/// Libraries imported anywhere in one post's code.
pub fn post_libraries(post: &SoPost) -> BTreeSet<String> {
    let mut libs = BTreeSet::new();
    for block in &post.code_blocks {
        for line in block.lines() {
            if let Some(imp) = extract_import(strip_prompt(line)) {
                libs.extend(imp.libraries().into_iter().map(str::to_owned));
            }
        }
    }
    libs
}

/// Distinct posts mentioning each library, sorted by library name.
pub fn count_libraries(posts: &[SoPost], classifier: &LibraryClassifier, exec: Execution) -> Vec<SoLibraryCount> {
    let per_post = par::map(posts, exec, post_libraries);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for libs in per_post {
        for lib in libs {
            *counts.entry(lib).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(library, post_count)| SoLibraryCount {
            class: classifier.classify(&library),
            library,
            post_count,
        })
        .collect()
}

/// Distinct authors with at least one event per library.
pub fn user_counts<'a>(events: impl IntoIterator<Item = &'a LibraryEvent>) -> BTreeMap<String, u64> {
    let mut users: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in events {
        users.entry(&e.library).or_default().insert(e.author.as_str());
    }
    users.into_iter().map(|(l, a)| (l.to_owned(), a.len() as u64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassCorrelation {
    pub class: LibraryClass,
    /// Libraries present in both inputs.
    pub points: usize,
    /// `None` when the class has fewer than three usable points.
    pub fit: Option<Regression>,
    pub reference_r_squared: f64,
}

/// Per-class least squares of log10(users) on log10(posts).
pub fn correlate_usage(so_counts: &[SoLibraryCount], users: &BTreeMap<String, u64>) -> Vec<ClassCorrelation> {
    LibraryClass::ALL
        .into_iter()
        .map(|class| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = so_counts
                .iter()
                .filter(|c| c.class == class && c.post_count >= 1)
                .filter_map(|c| {
                    let u = *users.get(&c.library)?;
                    (u >= 1).then(|| ((c.post_count as f64).log10(), (u as f64).log10()))
                })
                .unzip();
            ClassCorrelation {
                class,
                points: xs.len(),
                fit: least_squares(&xs, &ys),
                reference_r_squared: class.reference_r_squared(),
            }
        })
        .collect()
}
