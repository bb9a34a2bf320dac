//! Synthetic corpus generator with a complete ground-truth manifest.
//!
//! Every generated source line carries the set of libraries it references,
//! so per-commit line counts, adoptions, team rosters and planted fights are
//! known exactly without running any of the analysis code.

mod catalog;
mod repo;

use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::author::AuthorKey;
use crate::corpus::{write_manifest, CorpusEntry};
use crate::error::{Error, Result};
use crate::fights::{Comparator, Epsilon};
use crate::history::{write_git_stream, CommitRecord};
use crate::par::{self, Execution};
use crate::store::write_atomic;

use repo::{generate_repo, plant_commit_count, RepoPlan};

/// Number of libraries the generator knows about.
pub fn catalog_size() -> usize {
    catalog::CATALOG.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommitCounts {
    pub min: u32,
    pub max: u32,
    /// Pareto tail index.
    pub alpha: f64,
}

impl Default for CommitCounts {
    fn default() -> Self {
        CommitCounts {
            min: 3,
            max: 1500,
            alpha: 0.58,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeamSizes {
    pub max: u32,
    /// `P(k) ∝ k^-exponent`.
    pub exponent: f64,
}

impl Default for TeamSizes {
    fn default() -> Self {
        TeamSizes { max: 12, exponent: 1.6 }
    }
}

/// A fight to plant: per-round lists of per-commit net line changes, with
/// rounds alternating between adopter and deleter, starting with the
/// adopter. The first commit is the adoption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FightPlant {
    pub epsilon: f64,
    pub rounds: Vec<Vec<i64>>,
    /// A third author touches the library right after the fight.
    #[serde(default)]
    pub third_party: bool,
}

impl FightPlant {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidSpec(format!("fight plant {:?}: {why}", self.rounds)));
        let eps = Epsilon::new(self.epsilon)?;
        if self.rounds.len() < 2 || self.rounds.iter().any(Vec::is_empty) {
            return bad("needs at least two non-empty rounds");
        }
        if self.rounds[0][0] <= 0 {
            return bad("the adopting commit must add lines (S_0 > 0)");
        }
        let mut running = 0;
        for &c in self.rounds.iter().flatten() {
            if c == 0 {
                return bad("commits with zero net change cannot form rounds");
            }
            running += c;
            if running < 0 {
                return bad("deletes more lines than exist");
            }
        }
        let mut prev = 0;
        let mut fires = false;
        for (r, round) in self.rounds.iter().enumerate() {
            let now = prev + round.iter().sum::<i64>();
            if r % 2 == 1 && Comparator::Removal.triggers(eps, prev, now) {
                fires = true;
            }
            prev = now;
        }
        if !fires {
            return bad("does not reach the fight threshold at its epsilon");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub repo_count: usize,
    pub commits: CommitCounts,
    pub team: TeamSizes,
    /// Libraries drawn from the front of the built-in catalog.
    pub library_count: usize,
    pub author_pool: usize,
    pub merge_probability: f64,
    pub dangling_probability: f64,
    /// Chance that a main-line commit is stamped before its parent.
    pub out_of_order_probability: f64,
    /// Write each log in shuffled order instead of newest first.
    pub shuffle_logs: bool,
    pub fights: Vec<FightPlant>,
    /// Additional fights with randomly drawn round patterns.
    pub random_fights: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 42,
            repo_count: 200,
            commits: CommitCounts::default(),
            team: TeamSizes::default(),
            library_count: catalog_size(),
            author_pool: 400,
            merge_probability: 0.3,
            dangling_probability: 0.1,
            out_of_order_probability: 0.03,
            shuffle_logs: true,
            fights: vec![
                FightPlant {
                    epsilon: 0.1,
                    rounds: vec![vec![10], vec![-9]],
                    third_party: false,
                },
                FightPlant {
                    epsilon: 0.1,
                    rounds: vec![vec![10], vec![-5, -5], vec![3]],
                    third_party: true,
                },
            ],
            random_fights: 30,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: String| Err(Error::InvalidSpec(why));
        let c = &self.commits;
        if c.min == 0 || c.max < c.min || c.alpha.is_nan() || c.alpha <= 0.0 {
            return bad(format!("commit counts {c:?}"));
        }
        if self.team.max == 0 || !self.team.exponent.is_finite() {
            return bad(format!("team sizes {:?}", self.team));
        }
        if self.library_count == 0 || self.library_count > catalog_size() {
            return bad(format!("library_count must be within 1..={}", catalog_size()));
        }
        if self.author_pool < self.team.max as usize {
            return bad("author_pool is smaller than the largest team".into());
        }
        for (name, p) in [
            ("merge_probability", self.merge_probability),
            ("dangling_probability", self.dangling_probability),
            ("out_of_order_probability", self.out_of_order_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        self.fights.iter().try_for_each(FightPlant::validate)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDelta {
    pub add: u32,
    pub del: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitTruth {
    pub ordinal: u32,
    pub hash: String,
    pub parents: Vec<String>,
    pub author: AuthorKey,
    pub ts: i64,
    pub merge: bool,
    /// Library-referencing lines added and deleted, per library.
    pub libs: BTreeMap<String, LineDelta>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdoptionTruth {
    pub library: String,
    pub ordinal: u32,
    pub adopter: AuthorKey,
    pub initial_loc: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FightTruth {
    pub library: String,
    pub adopter: AuthorKey,
    pub deleter: AuthorKey,
    pub third_party: Option<AuthorKey>,
    /// Net lines per round.
    pub rounds: Vec<i64>,
    pub winner: AuthorKey,
    pub target_epsilon: f64,
    /// Thresholds among 0.1, 0.2, ..., 0.5 at which the plant is a fight.
    pub detected_at: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepoTruth {
    pub repo_id: String,
    pub commit_count: u64,
    pub team: Vec<AuthorKey>,
    /// In linearized order.
    pub commits: Vec<CommitTruth>,
    pub adoptions: Vec<AdoptionTruth>,
    pub fights: Vec<FightTruth>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: CorpusSpec,
    pub repos: Vec<RepoTruth>,
    pub first_commit_ts: BTreeMap<AuthorKey, i64>,
}

impl GroundTruth {
    pub fn total_commits(&self) -> u64 {
        self.repos.iter().map(|r| r.commit_count).sum()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthRepo {
    pub repo_id: String,
    pub raw_log: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub repos: Vec<SynthRepo>,
    pub truth: GroundTruth,
}

impl SynthCorpus {
    /// Writes `repos/<id>.log`, `corpus.jsonl` and `truth.json` under `dir`.
    /// The manifest stores paths relative to `dir`; the returned entries are
    /// already joined onto it.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<CorpusEntry>> {
        let logs = dir.join("repos");
        std::fs::create_dir_all(&logs).map_err(|e| Error::io(&logs, e))?;
        let mut entries = Vec::with_capacity(self.repos.len());
        for r in &self.repos {
            let rel = format!("repos/{}.log", r.repo_id);
            write_atomic(&dir.join(&rel), &r.raw_log)?;
            entries.push(CorpusEntry {
                repo_id: r.repo_id.clone(),
                log: rel.into(),
            });
        }
        write_manifest(&dir.join("corpus.jsonl"), &entries)?;
        write_atomic(&dir.join("truth.json"), &serde_json::to_vec(&self.truth)?)?;
        for e in &mut entries {
            e.log = dir.join(&e.log);
        }
        Ok(entries)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct PoolAuthor {
    pub name: String,
    pub email: String,
}

fn author_pool(rng: &mut ChaCha8Rng, n: usize) -> Vec<PoolAuthor> {
    (0..n)
        .map(|i| {
            let first = *catalog::FIRST_NAMES.choose(rng).expect("names");
            let last = *catalog::LAST_NAMES.choose(rng).expect("names");
            let domain = *catalog::DOMAINS.choose(rng).expect("domains");
            PoolAuthor {
                name: format!("{first} {last}"),
                email: format!("{}.{}{i}@{domain}", first.to_lowercase(), last.to_lowercase()),
            }
        })
        .collect()
}

fn random_plant(rng: &mut ChaCha8Rng) -> FightPlant {
    let s0: i64 = rng.gen_range(3..=14);
    let tenths: i64 = rng.gen_range(1..=5);
    let keep = s0 * tenths / 10;
    let removed = s0 - keep;
    let deletion = if removed >= 2 && rng.gen_bool(0.3) {
        let first = rng.gen_range(1..removed);
        vec![-first, -(removed - first)]
    } else {
        vec![-removed]
    };
    let mut rounds = vec![vec![s0], deletion];
    let mut running = keep;
    while rng.gen_bool(0.45) {
        if rounds.len() % 2 == 0 {
            let back = rng.gen_range(1..=8);
            running += back;
            rounds.push(vec![back]);
        } else {
            if running == 0 {
                break;
            }
            let cut = rng.gen_range(1..=running);
            running -= cut;
            rounds.push(vec![-cut]);
        }
    }
    FightPlant {
        epsilon: tenths as f64 / 10.0,
        rounds,
        third_party: rng.gen_bool(0.3),
    }
}

fn plan_corpus(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<RepoPlan>, Vec<PoolAuthor>)> {
    let pool = author_pool(rng, spec.author_pool);
    let team_weights: Vec<f64> = (1..=spec.team.max).map(|k| (k as f64).powf(-spec.team.exponent)).collect();
    let team_dist = WeightedIndex::new(&team_weights).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let c = &spec.commits;

    let mut plans = Vec::with_capacity(spec.repo_count);
    for i in 0..spec.repo_count {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let raw = c.min as f64 * u.powf(-1.0 / c.alpha);
        let commits = raw.clamp(c.min as f64, c.max as f64) as usize;
        let team = (team_dist.sample(rng) + 1).min(commits);
        let members: Vec<usize> = rand::seq::index::sample(rng, pool.len(), team).into_vec();
        let dangling = commits >= 4 && rng.gen_bool(spec.dangling_probability);
        let last_main = commits - 1 - usize::from(dangling);
        let branch_at = (commits >= 6 && rng.gen_bool(spec.merge_probability)).then(|| rng.gen_range(1..=last_main - 2));
        plans.push(RepoPlan {
            repo_id: format!("repo-{:04}", i + 1),
            commits,
            members,
            branch_at,
            dangling,
            plants: Vec::new(),
            stream: i as u64 + 1,
        });
    }

    let mut plants = spec.fights.clone();
    plants.extend((0..spec.random_fights).map(|_| random_plant(rng)));
    let mut used = vec![0usize; plans.len()];
    for (i, plant) in plants.into_iter().enumerate() {
        plant.validate()?;
        let need = plant_commit_count(&plant);
        let cast = if plant.third_party { 3 } else { 2 };
        let host = (0..plans.len())
            .filter(|&r| {
                let p = &plans[r];
                p.members.len() >= cast
                    && p.regular_capacity() >= used[r] + need
                    && p.plants.len() + 1 < spec.library_count
            })
            .min_by_key(|&r| (plans[r].plants.len(), std::cmp::Reverse(plans[r].regular_capacity() - used[r]), r))
            .ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "no repository can host fight plant #{i} ({need} commits, {cast} authors)"
                ))
            })?;
        used[host] += need;
        plans[host].plants.push(plant);
    }
    Ok((plans, pool))
}

/// Generates the corpus described by `spec`. Output is identical for equal
/// specs regardless of `exec`.
pub fn generate_corpus(spec: &CorpusSpec, exec: Execution) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let (plans, pool) = plan_corpus(spec, &mut master)?;
    let libs = &catalog::CATALOG[..spec.library_count];

    let outputs = par::map(&plans, exec, |plan| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(plan.stream);
        let out = generate_repo(plan, &pool, libs, spec.out_of_order_probability, rng.clone());
        let mut order: Vec<&CommitRecord> = out.commits.iter().rev().collect();
        if spec.shuffle_logs {
            rng.set_word_pos(1 << 40);
            order.shuffle(&mut rng);
        }
        let owned: Vec<CommitRecord> = order.into_iter().cloned().collect();
        let mut raw_log = Vec::new();
        write_git_stream(&owned, &mut raw_log).expect("writing to memory");
        (
            SynthRepo {
                repo_id: plan.repo_id.clone(),
                raw_log,
            },
            out.truth,
        )
    });

    let mut repos = Vec::with_capacity(outputs.len());
    let mut truths = Vec::with_capacity(outputs.len());
    let mut first_commit_ts: BTreeMap<AuthorKey, i64> = BTreeMap::new();
    for (r, t) in outputs {
        for c in &t.commits {
            first_commit_ts
                .entry(c.author.clone())
                .and_modify(|ts| *ts = (*ts).min(c.ts))
                .or_insert(c.ts);
        }
        repos.push(r);
        truths.push(t);
    }
    Ok(SynthCorpus {
        repos,
        truth: GroundTruth {
            spec: spec.clone(),
            repos: truths,
            first_commit_ts,
        },
    })
}
