use std::collections::HashMap;

use serde::Serialize;

use crate::imports::LibraryEvent;
use crate::stats::{nearest_rank, Histogram};

use super::AdoptionEvent;

/// The per-repository facts the corpus distributions are built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepoSummary {
    pub repo_id: String,
    pub commit_count: u64,
    pub team_size: u64,
    pub adoption_ordinals: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerCommitAdoptions {
    pub x: u32,
    /// Repositories that have a commit at index `x`.
    pub repos: u64,
    pub total: u64,
    pub mean: f64,
    /// Nearest-rank median over those repositories.
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub repos: u64,
    pub commits: Histogram,
    pub adoptions: Histogram,
    pub team_size: Histogram,
    pub per_commit: Vec<PerCommitAdoptions>,
    pub total_adoptions: u64,
    /// Adoptions at commit indices past the horizon, not in `per_commit`.
    pub beyond_horizon: u64,
}

pub fn corpus_distributions(repos: &[RepoSummary], horizon: usize) -> DistributionSummary {
    let commits = Histogram::from_values(repos.iter().map(|r| r.commit_count));
    let adoptions = Histogram::from_values(repos.iter().map(|r| r.adoption_ordinals.len() as u64));
    let team_size = Histogram::from_values(repos.iter().map(|r| r.team_size));
    let total_adoptions: u64 = repos.iter().map(|r| r.adoption_ordinals.len() as u64).sum();

    let max_commits = repos.iter().map(|r| r.commit_count).max().unwrap_or(0);
    let last_x = (max_commits as usize).min(horizon + 1);
    let per_repo: Vec<HashMap<u32, u64>> = repos
        .iter()
        .map(|r| {
            let mut m = HashMap::new();
            for &o in &r.adoption_ordinals {
                *m.entry(o).or_default() += 1;
            }
            m
        })
        .collect();
    let per_commit: Vec<PerCommitAdoptions> = (0..last_x as u32)
        .map(|x| {
            let mut counts: Vec<f64> = repos
                .iter()
                .zip(&per_repo)
                .filter(|(r, _)| r.commit_count > x as u64)
                .map(|(_, m)| m.get(&x).copied().unwrap_or(0) as f64)
                .collect();
            counts.sort_by(f64::total_cmp);
            let total = counts.iter().sum::<f64>() as u64;
            PerCommitAdoptions {
                x,
                repos: counts.len() as u64,
                total,
                mean: total as f64 / counts.len() as f64,
                median: nearest_rank(&counts, 0.5).unwrap_or(0.0),
            }
        })
        .collect();
    let in_window: u64 = per_commit.iter().map(|p| p.total).sum();

    DistributionSummary {
        repos: repos.len() as u64,
        commits,
        adoptions,
        team_size,
        per_commit,
        total_adoptions,
        beyond_horizon: total_adoptions - in_window,
    }
}

/// Line-count statistics around adoptions.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AdoptionStats {
    /// Library events (commit × library) considered.
    pub events: u64,
    /// Mean and median lines referencing the library per event.
    pub mean_loc: f64,
    pub median_loc: f64,
    /// Events after the adopting commit of their library.
    pub after_events: u64,
    pub mean_insert_after: f64,
    pub mean_delete_after: f64,
}

/// `repos` pairs each repository's events with its adoptions.
pub fn adoption_stats<'a>(
    repos: impl IntoIterator<Item = (&'a [LibraryEvent], &'a [AdoptionEvent])>,
) -> AdoptionStats {
    let mut loc = Vec::new();
    let (mut after, mut ins, mut del) = (0u64, 0u64, 0u64);
    for (events, adoptions) in repos {
        let adopted: HashMap<&str, u32> = adoptions.iter().map(|a| (a.library.as_str(), a.ordinal)).collect();
        for e in events {
            loc.push((e.added_loc + e.deleted_loc) as f64);
            if adopted.get(e.library.as_str()).is_some_and(|&o| e.ordinal > o) {
                after += 1;
                ins += e.added_loc as u64;
                del += e.deleted_loc as u64;
            }
        }
    }
    if loc.is_empty() {
        return AdoptionStats::default();
    }
    loc.sort_by(f64::total_cmp);
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    AdoptionStats {
        events: loc.len() as u64,
        mean_loc: loc.iter().sum::<f64>() / loc.len() as f64,
        median_loc: nearest_rank(&loc, 0.5).unwrap_or(0.0),
        after_events: after,
        mean_insert_after: ratio(ins, after),
        mean_delete_after: ratio(del, after),
    }
}
