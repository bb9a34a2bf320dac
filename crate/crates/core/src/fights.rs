//! Two-person code fights over a newly adopted library.
//!
//! A library's post-adoption history is collapsed into rounds: maximal runs
//! of library-touching commits by one author. A fight starts when the first
//! non-adopter to touch the library removes nearly all of the accumulated
//! lines in one round; it runs until a third author steps in or the history
//! ends, and whoever authored its last round wins.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adoption::{AdoptionEvent, Buckets};
use crate::author::AuthorKey;
use crate::error::{Error, Result};
use crate::imports::LibraryEvent;
use crate::store::CommitMeta;

pub const DEFAULT_EPSILONS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

const PPM: i128 = 1_000_000;

/// Fight threshold, held in millionths so comparisons are exact integer
/// arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Epsilon(u32);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::InvalidEpsilon(value));
        }
        Ok(Epsilon((value * PPM as f64).round() as u32))
    }

    pub fn millionths(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / PPM as f64
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("epsilon {s:?} is not a number")))?;
        Epsilon::new(v)
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Epsilon::new(v).map_err(serde::de::Error::custom)
    }
}

/// When a deleter's round counts as the start of a fight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    /// At least `1 − ε` of the accumulated lines removed:
    /// `running ≤ ε · previous`.
    #[default]
    Removal,
    /// At least `ε` of the accumulated lines removed:
    /// `running ≤ (1 − ε) · previous`.
    Reduction,
}

impl Comparator {
    /// Only meaningful when there was something to remove (`previous > 0`).
    pub fn triggers(self, epsilon: Epsilon, previous: i64, running: i64) -> bool {
        if previous <= 0 {
            return false;
        }
        let keep = match self {
            Comparator::Removal => epsilon.0 as i128,
            Comparator::Reduction => PPM - epsilon.0 as i128,
        };
        running as i128 * PPM <= keep * previous as i128
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Removal => "removal",
            Comparator::Reduction => "reduction",
        })
    }
}

impl FromStr for Comparator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "removal" => Ok(Comparator::Removal),
            "reduction" => Ok(Comparator::Reduction),
            _ => Err(Error::InvalidInput(format!(
                "comparator {s:?} (expected removal or reduction)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FightConfig {
    pub epsilon: Epsilon,
    pub comparator: Comparator,
}

impl FightConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(FightConfig {
            epsilon: Epsilon::new(epsilon)?,
            comparator: Comparator::default(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Round {
    pub index: usize,
    pub author: AuthorKey,
    pub ordinals: Vec<u32>,
    pub net: i64,
    /// Lines referencing the library after this round.
    pub running: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fight {
    pub repo_id: String,
    pub library: String,
    pub adoption_ordinal: u32,
    pub adopter: AuthorKey,
    pub deleter: AuthorKey,
    pub config: FightConfig,
    pub rounds: Vec<Round>,
    pub winner: AuthorKey,
    /// Index of the round that crossed the threshold.
    pub trigger: usize,
}

/// Collapses a library's post-adoption commits into rounds.
///
/// Round 0 opens with the adopting commit, counted at its added lines, and
/// absorbs the adopter's directly following commits. Commits with a net
/// change of zero take no part.
pub fn build_rounds(adoption: &AdoptionEvent, events: &[LibraryEvent]) -> Vec<Round> {
    let mut rounds = vec![Round {
        index: 0,
        author: adoption.adopter.clone(),
        ordinals: vec![adoption.ordinal],
        net: adoption.initial_loc as i64,
        running: adoption.initial_loc as i64,
    }];
    for e in events
        .iter()
        .filter(|e| e.library == adoption.library && e.ordinal > adoption.ordinal && e.net() != 0)
    {
        let last = rounds.last_mut().expect("round 0 exists");
        if last.author == e.author {
            last.net += e.net();
            last.running += e.net();
            last.ordinals.push(e.ordinal);
        } else {
            let running = last.running + e.net();
            let index = rounds.len();
            rounds.push(Round {
                index,
                author: e.author.clone(),
                ordinals: vec![e.ordinal],
                net: e.net(),
                running,
            });
        }
    }
    rounds
}

/// Looks for a fight in `rounds`.
///
/// The candidate deleter is the author of round 1. Rounds are scanned while
/// they belong to the adopter or the deleter; the first deleter round that
/// satisfies the comparator against the previous running total starts the
/// fight, which then extends to the last consecutive round by either of the
/// two.
pub fn detect_fight(adoption: &AdoptionEvent, rounds: &[Round], config: FightConfig) -> Option<Fight> {
    let adopter = &rounds.first()?.author;
    let deleter = &rounds.get(1)?.author;
    let end = rounds
        .iter()
        .position(|r| &r.author != adopter && &r.author != deleter)
        .unwrap_or(rounds.len());
    let trigger = (1..end).find(|&r| {
        &rounds[r].author == deleter
            && config
                .comparator
                .triggers(config.epsilon, rounds[r - 1].running, rounds[r].running)
    })?;
    let rounds = rounds[..end].to_vec();
    Some(Fight {
        repo_id: adoption.repo_id.clone(),
        library: adoption.library.clone(),
        adoption_ordinal: adoption.ordinal,
        adopter: adopter.clone(),
        deleter: deleter.clone(),
        config,
        winner: rounds.last().expect("end > trigger").author.clone(),
        rounds,
        trigger,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExperienceRecord {
    pub author: AuthorKey,
    pub first_commit_ts: i64,
}

/// Corpus-wide first commit time of every author.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperienceTable(BTreeMap<AuthorKey, i64>);

impl ExperienceTable {
    pub fn from_commits<'a>(commits: impl IntoIterator<Item = &'a CommitMeta>) -> Self {
        let mut t = ExperienceTable::default();
        t.extend(commits);
        t
    }

    pub fn extend<'a>(&mut self, commits: impl IntoIterator<Item = &'a CommitMeta>) {
        for c in commits {
            self.0
                .entry(c.author.clone())
                .and_modify(|ts| *ts = (*ts).min(c.ts))
                .or_insert(c.ts);
        }
    }

    pub fn first_commit(&self, author: &AuthorKey) -> Result<i64> {
        self.0
            .get(author)
            .copied()
            .ok_or_else(|| Error::MissingExperience(author.to_string()))
    }

    pub fn records(&self) -> Vec<ExperienceRecord> {
        self.0
            .iter()
            .map(|(a, &ts)| ExperienceRecord {
                author: a.clone(),
                first_commit_ts: ts,
            })
            .collect()
    }
}

/// What fight statistics need to know about each repository.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepoFacts {
    pub repo_id: String,
    pub team_size: u64,
    pub commit_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TeamFightRow {
    pub team_bucket: String,
    pub epsilon: Epsilon,
    pub fights: u64,
    pub commits: u64,
    /// Fights per commit; `None` when the bucket has no commits.
    pub probability: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperienceGapRow {
    pub epsilon: Epsilon,
    /// 1-based quantile group of the experience gap.
    pub group: usize,
    pub fights: u64,
    pub gap_min_secs: Option<i64>,
    pub gap_max_secs: Option<i64>,
    /// Fights whose two parties started at different times.
    pub decided: u64,
    pub experienced_wins: u64,
    pub win_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoughtLibraryRow {
    pub epsilon: Epsilon,
    pub library: String,
    pub adoptions: u64,
    pub fights: u64,
    pub fights_per_1000_adoptions: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundLocRow {
    pub epsilon: Epsilon,
    pub round: usize,
    /// `adopter` for even rounds, `deleter` for odd ones.
    pub role: &'static str,
    pub fights: u64,
    pub mean_net_loc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FightOutcomeRow {
    pub epsilon: Epsilon,
    pub fights: u64,
    pub deleter_wins: u64,
    /// Fights where the adopter answered the trigger round.
    pub adopter_fought_back: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FightReport {
    pub by_team: Vec<TeamFightRow>,
    pub by_experience_gap: Vec<ExperienceGapRow>,
    pub libraries: Vec<FoughtLibraryRow>,
    pub rounds: Vec<RoundLocRow>,
    pub outcomes: Vec<FightOutcomeRow>,
}

pub const EXPERIENCE_GROUPS: usize = 5;

/// Summarizes detected fights, one block per threshold in `epsilons`.
/// `adoptions_per_library` normalizes the per-library counts.
pub fn fight_stats(
    fights: &[Fight],
    epsilons: &[Epsilon],
    repos: &[RepoFacts],
    adoptions_per_library: &BTreeMap<String, u64>,
    experience: &ExperienceTable,
    team_buckets: &Buckets,
) -> Result<FightReport> {
    let team_of: BTreeMap<&str, u64> = repos.iter().map(|r| (r.repo_id.as_str(), r.team_size)).collect();
    let mut report = FightReport::default();

    for &eps in epsilons {
        let these: Vec<&Fight> = fights.iter().filter(|f| f.config.epsilon == eps).collect();

        for (bi, bucket) in team_buckets.0.iter().enumerate() {
            let commits: u64 = repos
                .iter()
                .filter(|r| team_buckets.index_of(r.team_size) == Some(bi))
                .map(|r| r.commit_count)
                .sum();
            let n = these
                .iter()
                .filter(|f| {
                    team_of
                        .get(f.repo_id.as_str())
                        .is_some_and(|&t| team_buckets.index_of(t) == Some(bi))
                })
                .count() as u64;
            report.by_team.push(TeamFightRow {
                team_bucket: bucket.label.clone(),
                epsilon: eps,
                fights: n,
                commits,
                probability: (commits > 0).then(|| n as f64 / commits as f64),
            });
        }

        let mut gaps = Vec::with_capacity(these.len());
        for f in &these {
            let u = experience.first_commit(&f.adopter)?;
            let v = experience.first_commit(&f.deleter)?;
            let more_experienced = match u.cmp(&v) {
                std::cmp::Ordering::Less => Some(&f.adopter),
                std::cmp::Ordering::Greater => Some(&f.deleter),
                std::cmp::Ordering::Equal => None,
            };
            gaps.push(((u - v).abs(), more_experienced.map(|a| a == &f.winner)));
        }
        gaps.sort_by_key(|&(g, _)| g);
        let n = gaps.len();
        for group in 0..EXPERIENCE_GROUPS {
            let slice = &gaps[group * n / EXPERIENCE_GROUPS..(group + 1) * n / EXPERIENCE_GROUPS];
            let decided = slice.iter().filter(|(_, w)| w.is_some()).count() as u64;
            let wins = slice.iter().filter(|(_, w)| *w == Some(true)).count() as u64;
            report.by_experience_gap.push(ExperienceGapRow {
                epsilon: eps,
                group: group + 1,
                fights: slice.len() as u64,
                gap_min_secs: slice.first().map(|g| g.0),
                gap_max_secs: slice.last().map(|g| g.0),
                decided,
                experienced_wins: wins,
                win_fraction: (decided > 0).then(|| wins as f64 / decided as f64),
            });
        }

        let mut per_lib: BTreeMap<&str, u64> = BTreeMap::new();
        for f in &these {
            *per_lib.entry(f.library.as_str()).or_default() += 1;
        }
        let mut libs: Vec<FoughtLibraryRow> = per_lib
            .into_iter()
            .map(|(lib, n)| {
                let adoptions = adoptions_per_library.get(lib).copied().unwrap_or(0).max(n);
                FoughtLibraryRow {
                    epsilon: eps,
                    library: lib.to_owned(),
                    adoptions,
                    fights: n,
                    fights_per_1000_adoptions: 1000.0 * n as f64 / adoptions as f64,
                }
            })
            .collect();
        libs.sort_by(|a, b| {
            b.fights_per_1000_adoptions
                .total_cmp(&a.fights_per_1000_adoptions)
                .then_with(|| a.library.cmp(&b.library))
        });
        report.libraries.extend(libs);

        let max_rounds = these.iter().map(|f| f.rounds.len()).max().unwrap_or(0);
        for r in 0..max_rounds {
            let nets: Vec<i64> = these.iter().filter_map(|f| f.rounds.get(r).map(|x| x.net)).collect();
            report.rounds.push(RoundLocRow {
                epsilon: eps,
                round: r,
                role: if r % 2 == 0 { "adopter" } else { "deleter" },
                fights: nets.len() as u64,
                mean_net_loc: nets.iter().sum::<i64>() as f64 / nets.len() as f64,
            });
        }

        report.outcomes.push(FightOutcomeRow {
            epsilon: eps,
            fights: these.len() as u64,
            deleter_wins: these.iter().filter(|f| f.winner == f.deleter).count() as u64,
            adopter_fought_back: these
                .iter()
                .filter(|f| f.rounds[f.trigger + 1..].iter().any(|r| r.author == f.adopter))
                .count() as u64,
        });
    }
    Ok(report)
}

/// Adoption counts per library across a set of adoptions.
pub fn adoption_counts<'a>(adoptions: impl IntoIterator<Item = &'a AdoptionEvent>) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    for a in adoptions {
        *m.entry(a.library.clone()).or_default() += 1;
    }
    m
}

/// Authors that took part in at least one fight.
pub fn participants(fights: &[Fight]) -> BTreeSet<&AuthorKey> {
    fights.iter().flat_map(|f| [&f.adopter, &f.deleter]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adoption(initial: u32) -> AdoptionEvent {
        AdoptionEvent {
            repo_id: "p".into(),
            library: "lib".into(),
            ordinal: 0,
            adopter: "u".into(),
            initial_loc: initial,
        }
    }

    fn ev(ord: u32, author: &str, add: u32, del: u32) -> LibraryEvent {
        LibraryEvent {
            repo_id: "p".into(),
            ordinal: ord,
            author: author.into(),
            library: "lib".into(),
            added_loc: add,
            deleted_loc: del,
            import_added: false,
            import_removed: false,
        }
    }

    fn summary(rounds: &[Round]) -> Vec<(&str, i64)> {
        rounds.iter().map(|r| (r.author.as_str(), r.net)).collect()
    }

    #[test]
    fn consecutive_deletions_collapse() {
        let events = [ev(0, "u", 10, 0), ev(2, "v", 0, 5), ev(3, "v", 0, 6), ev(5, "u", 3, 0)];
        let rounds = build_rounds(&adoption(10), &events);
        assert_eq!(summary(&rounds), [("u", 10), ("v", -11), ("u", 3)]);
        assert_eq!(rounds[1].ordinals, [2, 3]);
        assert_eq!(rounds.iter().map(|r| r.running).collect::<Vec<_>>(), [10, -1, 2]);
    }

    #[test]
    fn adopter_follow_ups_join_round_zero_and_zero_nets_are_ignored() {
        let events = [ev(0, "u", 4, 0), ev(1, "u", 2, 0), ev(2, "w", 1, 1), ev(3, "u", 1, 0)];
        let rounds = build_rounds(&adoption(4), &events);
        assert_eq!(summary(&rounds), [("u", 7)]);
        assert_eq!(build_rounds(&adoption(10), &[ev(0, "u", 10, 0)]).len(), 1);
    }

    fn rounds_of(nets: &[(&str, i64)]) -> Vec<Round> {
        let mut running = 0;
        nets.iter()
            .enumerate()
            .map(|(i, &(a, n))| {
                running += n;
                Round {
                    index: i,
                    author: a.into(),
                    ordinals: vec![i as u32],
                    net: n,
                    running,
                }
            })
            .collect()
    }

    #[test]
    fn threshold_examples() {
        let cfg = FightConfig::new(0.1).unwrap();
        let f = detect_fight(&adoption(10), &rounds_of(&[("u", 10), ("v", -9)]), cfg).unwrap();
        assert_eq!(f.winner.as_str(), "v");
        assert_eq!(f.trigger, 1);
        assert!(detect_fight(&adoption(10), &rounds_of(&[("u", 10), ("v", -5)]), cfg).is_none());
    }

    #[test]
    fn fight_extent_and_winner() {
        let cfg = FightConfig::new(0.1).unwrap();
        let r = rounds_of(&[("u", 10), ("v", -10), ("u", 4), ("v", -1), ("w", 5), ("u", 1)]);
        let f = detect_fight(&adoption(10), &r, cfg).unwrap();
        assert_eq!(f.rounds.len(), 4);
        assert_eq!(f.winner.as_str(), "v");
        assert_eq!(f.deleter.as_str(), "v");
    }

    #[test]
    fn third_party_closes_the_window() {
        let cfg = FightConfig::new(0.5).unwrap();
        let r = rounds_of(&[("u", 10), ("v", 2), ("w", -12)]);
        assert!(detect_fight(&adoption(10), &r, cfg).is_none());
    }

    #[test]
    fn comparators() {
        let e = Epsilon::new(0.3).unwrap();
        assert!(Comparator::Removal.triggers(e, 10, 3));
        assert!(!Comparator::Removal.triggers(e, 10, 4));
        assert!(Comparator::Reduction.triggers(e, 10, 7));
        assert!(!Comparator::Reduction.triggers(e, 10, 8));
        assert!(!Comparator::Removal.triggers(e, 0, -5));
        assert!(Epsilon::new(1.0).is_err());
        assert!(Epsilon::new(0.0).is_err());
        assert_eq!("0.1".parse::<Epsilon>().unwrap().to_string(), "0.1");
    }

    #[test]
    fn experience_is_corpus_minimum() {
        let c = |a: &str, ts| CommitMeta {
            ordinal: 0,
            hash: String::new(),
            author: a.into(),
            ts,
            merge: false,
        };
        let repo_a = [c("x", 50), c("x", 10), c("x", 99)];
        let repo_b = [c("y", 7), c("x", 3)];
        let mut t = ExperienceTable::from_commits(&repo_a);
        assert_eq!(t.first_commit(&"x".into()).unwrap(), 10);
        t.extend(&repo_b);
        assert_eq!(t.first_commit(&"x".into()).unwrap(), 3);
        assert!(matches!(t.first_commit(&"z".into()), Err(Error::MissingExperience(_))));
    }

    #[test]
    fn single_fight_report() {
        let cfg = FightConfig::new(0.1).unwrap();
        let f = detect_fight(&adoption(10), &rounds_of(&[("u", 10), ("v", -9)]), cfg).unwrap();
        let c = |a: &str, ts| CommitMeta {
            ordinal: 0,
            hash: String::new(),
            author: a.into(),
            ts,
            merge: false,
        };
        let exp = ExperienceTable::from_commits(&[c("u", 1), c("v", 100)]);
        let repos = [RepoFacts {
            repo_id: "p".into(),
            team_size: 2,
            commit_count: 40,
        }];
        let counts = BTreeMap::from([("lib".to_owned(), 4)]);
        let r = fight_stats(&[f], &[cfg.epsilon], &repos, &counts, &exp, &Buckets::team_sizes()).unwrap();
        let decided: Vec<_> = r.by_experience_gap.iter().filter(|g| g.fights > 0).collect();
        assert_eq!(decided.len(), 1);
        assert_eq!(decided[0].win_fraction, Some(0.0));
        assert_eq!(r.by_team[1].probability, Some(1.0 / 40.0));
        assert_eq!(r.by_team[0].probability, None);
        assert_eq!(r.libraries[0].fights_per_1000_adoptions, 250.0);
        assert_eq!(r.outcomes[0].deleter_wins, 1);
        assert_eq!(r.rounds.len(), 2);
        assert!(fight_stats(&[], &[cfg.epsilon], &repos, &counts, &ExperienceTable::default(), &Buckets::team_sizes()).is_ok());
    }
}
