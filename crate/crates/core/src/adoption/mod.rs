//! Adoption events and what happens to a library's footprint afterwards.

mod aggregate;
mod distributions;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::author::AuthorKey;
use crate::error::{Error, Result};
use crate::imports::LibraryEvent;
use crate::store::CommitMeta;

pub use aggregate::{aggregate_growth, Bucket, Buckets, CurvePoint, GroupCurve};
pub use distributions::{
    adoption_stats, corpus_distributions, AdoptionStats, DistributionSummary, PerCommitAdoptions,
    RepoSummary,
};

pub const DEFAULT_HORIZON: usize = 100;

/// First appearance of a library in a project.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdoptionEvent {
    pub repo_id: String,
    pub library: String,
    pub ordinal: u32,
    pub adopter: AuthorKey,
    /// Lines referencing the library added by the adopting commit.
    pub initial_loc: u32,
}

/// Finds the adoption of every library in one repository's events, which
/// must be in ordinal order. A library whose first sighting only deletes
/// lines is adopted at its first event that adds some.
pub fn detect_adoptions(events: &[LibraryEvent]) -> Vec<AdoptionEvent> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for e in events {
        if e.added_loc == 0 || seen.contains(e.library.as_str()) {
            continue;
        }
        seen.insert(e.library.as_str());
        out.push(AdoptionEvent {
            repo_id: e.repo_id.clone(),
            library: e.library.clone(),
            ordinal: e.ordinal,
            adopter: e.author.clone(),
            initial_loc: e.added_loc,
        });
    }
    out
}

/// How the post-adoption commit index `x` advances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Indexing {
    /// Every commit of the repository advances `x`.
    #[default]
    AllCommits,
    /// Only commits that touch the library advance `x`.
    LibraryCommits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ActivityPoint {
    pub added: u32,
    pub deleted: u32,
}

impl ActivityPoint {
    pub fn net(&self) -> i64 {
        self.added as i64 - self.deleted as i64
    }
}

/// Per-commit activity on one library from its adoption (`x = 0`) onwards.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActivitySeries {
    pub repo_id: String,
    pub library: String,
    pub adoption_ordinal: u32,
    pub points: Vec<ActivityPoint>,
    /// Whether the horizon cut the series short of the repository's history.
    pub truncated: bool,
}

/// Builds the activity series for `adoption` from its repository's events.
/// `commit_count` is the number of commits in the repository.
pub fn activity_series(
    adoption: &AdoptionEvent,
    repo_events: &[LibraryEvent],
    commit_count: u32,
    horizon: usize,
    indexing: Indexing,
) -> ActivitySeries {
    let mut by_ordinal: HashMap<u32, ActivityPoint> = HashMap::new();
    for e in repo_events
        .iter()
        .filter(|e| e.library == adoption.library && e.ordinal >= adoption.ordinal)
    {
        let p = by_ordinal.entry(e.ordinal).or_insert(ActivityPoint { added: 0, deleted: 0 });
        p.added += e.added_loc;
        p.deleted += e.deleted_loc;
    }
    let ordinals: Vec<u32> = match indexing {
        Indexing::AllCommits => (adoption.ordinal..commit_count.max(adoption.ordinal + 1)).collect(),
        Indexing::LibraryCommits => {
            let mut v: Vec<u32> = by_ordinal.keys().copied().collect();
            v.sort_unstable();
            v
        }
    };
    let truncated = ordinals.len() > horizon + 1;
    let points = ordinals
        .into_iter()
        .take(horizon + 1)
        .map(|o| by_ordinal.get(&o).copied().unwrap_or(ActivityPoint { added: 0, deleted: 0 }))
        .collect();
    ActivitySeries {
        repo_id: adoption.repo_id.clone(),
        library: adoption.library.clone(),
        adoption_ordinal: adoption.ordinal,
        points,
        truncated,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    HorizonReached,
    /// The running line count would have dropped to zero or below.
    UsageExtinguished,
    /// The repository ran out of commits before the horizon.
    HistoryEnded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthSeries {
    pub repo_id: String,
    pub library: String,
    /// `values[x]` is the library's line count after commit `x` relative to
    /// the adopting commit; `values[0] == 1`.
    pub values: Vec<f64>,
    pub termination: Termination,
}

/// Runs the growth recurrence over per-commit net changes, where `nets[0]`
/// is the adopting commit's line count `S_0`:
///
/// ```text
/// y_0 = 1
/// y_x = y_{x-1} · (S_{x-1} + n_x) / S_{x-1},   S_x = S_{x-1} + n_x
/// ```
///
/// The series stops before the first `x` whose running total would be
/// `<= 0`, and after `horizon + 1` values. Returns the values and whether the
/// stop was an extinction.
pub fn growth_recurrence(nets: &[i64], horizon: usize) -> Result<(Vec<f64>, bool), i64> {
    let s0 = nets.first().copied().unwrap_or(0);
    if s0 <= 0 {
        return Err(s0);
    }
    let mut values = vec![1.0];
    let mut y = 1.0_f64;
    let mut total = s0;
    for &n in nets.iter().skip(1).take(horizon) {
        let next = total + n;
        if next <= 0 {
            return Ok((values, true));
        }
        y = y * next as f64 / total as f64;
        total = next;
        values.push(y);
    }
    Ok((values, false))
}

pub fn growth_series(adoption: &AdoptionEvent, activity: &ActivitySeries, horizon: usize) -> Result<GrowthSeries> {
    let invalid = |s0: i64| Error::InvalidAdoption {
        repo: adoption.repo_id.clone(),
        library: adoption.library.clone(),
        initial_loc: s0,
    };
    let s0 = adoption.initial_loc as i64;
    if s0 <= 0 {
        return Err(invalid(s0));
    }
    let nets: Vec<i64> = std::iter::once(s0)
        .chain(activity.points.iter().skip(1).map(ActivityPoint::net))
        .collect();
    let (values, extinguished) = growth_recurrence(&nets, horizon).map_err(invalid)?;
    let termination = if extinguished {
        Termination::UsageExtinguished
    } else if values.len() == horizon + 1 {
        Termination::HorizonReached
    } else {
        Termination::HistoryEnded
    };
    Ok(GrowthSeries {
        repo_id: adoption.repo_id.clone(),
        library: adoption.library.clone(),
        values,
        termination,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TeamProfile {
    pub repo_id: String,
    pub team_size: usize,
}

/// Team size = number of distinct committer identities.
pub fn team_profile(repo_id: &str, commits: &[CommitMeta]) -> TeamProfile {
    let authors: BTreeSet<&AuthorKey> = commits.iter().map(|c| &c.author).collect();
    TeamProfile {
        repo_id: repo_id.to_owned(),
        team_size: authors.len(),
    }
}
