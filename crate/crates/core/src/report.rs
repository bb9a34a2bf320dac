//! End-to-end pipeline: ingesting a corpus into an event store, running
//! every analysis over the stored corpus, and writing the CSV artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::adoption::{
    activity_series, adoption_stats, aggregate_growth, corpus_distributions, detect_adoptions, growth_series,
    team_profile, AdoptionEvent, AdoptionStats, Buckets, DistributionSummary, GroupCurve, GrowthSeries, Indexing,
    RepoSummary, Termination, DEFAULT_HORIZON,
};
use crate::corpus::CorpusEntry;
use crate::error::{Error, Result};
use crate::fights::{
    adoption_counts, build_rounds, detect_fight, fight_stats, Comparator, Epsilon, ExperienceTable, Fight,
    FightConfig, FightReport, RepoFacts, DEFAULT_EPSILONS,
};
use crate::history::{linearize, parse_git_stream, ParseWarning};
use crate::imports::{mine_repository, MineOptions};
use crate::par::{self, Execution};
use crate::stackoverflow::{
    correlate_usage, count_libraries, parse_posts_dump, user_counts, ClassCorrelation, LibraryClass,
    LibraryClassifier, SoLibraryCount,
};
use crate::stats::Histogram;
use crate::store::{write_atomic, CommitMeta, EventStore, RepoData, DEFAULT_SHARD_CAP};

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Every knob of a run. Echoed into `run_config.json` next to the outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub out: PathBuf,
    pub epsilons: Vec<Epsilon>,
    pub horizon: usize,
    #[serde(serialize_with = "display")]
    pub team_buckets: Buckets,
    #[serde(serialize_with = "display")]
    pub so_buckets: Buckets,
    pub comparator: Comparator,
    pub indexing: Indexing,
    pub include_merge_diffs: bool,
    pub count_import_lines: bool,
    pub workers: Option<usize>,
    pub shard_cap: u64,
    pub so_posts: Option<PathBuf>,
    pub standard_libs: Option<PathBuf>,
    pub pypi_names: Option<PathBuf>,
    /// Previously written `so_counts.csv`, used to group growth curves.
    pub so_counts: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            store: None,
            out: PathBuf::from("out"),
            epsilons: DEFAULT_EPSILONS
                .iter()
                .map(|&e| Epsilon::new(e).expect("default epsilons are valid"))
                .collect(),
            horizon: DEFAULT_HORIZON,
            team_buckets: Buckets::team_sizes(),
            so_buckets: Buckets::so_posts(),
            comparator: Comparator::default(),
            indexing: Indexing::default(),
            include_merge_diffs: false,
            count_import_lines: true,
            workers: None,
            shard_cap: DEFAULT_SHARD_CAP,
            so_posts: None,
            standard_libs: None,
            pypi_names: None,
            so_counts: None,
        }
    }
}

impl RunConfig {
    pub fn mine_options(&self) -> MineOptions {
        MineOptions {
            include_merge_diffs: self.include_merge_diffs,
            count_import_lines: self.count_import_lines,
        }
    }

    pub fn fight_configs(&self) -> Vec<FightConfig> {
        self.epsilons
            .iter()
            .map(|&epsilon| FightConfig {
                epsilon,
                comparator: self.comparator,
            })
            .collect()
    }

    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("run_config.json");
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

pub fn open_or_create_store(dir: &Path, shard_cap: u64) -> Result<EventStore> {
    if dir.join("store.json").exists() {
        EventStore::open(dir)
    } else {
        EventStore::create(dir, shard_cap)
    }
}

/// Parses, linearizes and mines one raw log.
pub fn mine_log(repo_id: &str, path: &Path, options: &MineOptions) -> Result<(RepoData, Vec<ParseWarning>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed = parse_git_stream(repo_id, BufReader::new(file))?;
    let commits = linearize(parsed.commits)?;
    let events = mine_repository(&commits, options)?;
    let commits = commits
        .iter()
        .map(|c| {
            Ok(CommitMeta {
                ordinal: c.ordinal.ok_or_else(|| Error::Unlinearized { hash: c.hash.clone() })?,
                hash: c.hash.clone(),
                author: c.author.key.clone(),
                ts: c.author_ts,
                merge: c.is_merge,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        RepoData {
            repo_id: repo_id.to_owned(),
            events,
            commits,
        },
        parsed.warnings,
    ))
}

#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub repos: usize,
    pub commits: u64,
    pub events: u64,
    pub warnings: Vec<(String, ParseWarning)>,
}

/// Mines every repository of the manifest (in parallel) and appends them to
/// the store in manifest order.
pub fn ingest(
    entries: &[CorpusEntry],
    store: &mut EventStore,
    options: &MineOptions,
    exec: Execution,
) -> Result<IngestReport> {
    for e in entries {
        if store.contains(&e.repo_id) {
            return Err(Error::DuplicateRepo(e.repo_id.clone()));
        }
    }
    let mined = par::try_map(entries, exec, |e| mine_log(&e.repo_id, &e.log, options))?;
    let mut report = IngestReport::default();
    for (data, warnings) in mined {
        store.append_repo(&data)?;
        report.repos += 1;
        report.commits += data.commits.len() as u64;
        report.events += data.events.len() as u64;
        report
            .warnings
            .extend(warnings.into_iter().map(|w| (data.repo_id.clone(), w)));
    }
    Ok(report)
}

/// One stored repository with its derived adoption list.
#[derive(Clone, Debug)]
pub struct RepoView {
    pub data: RepoData,
    pub adoptions: Vec<AdoptionEvent>,
    pub team_size: u64,
}

impl RepoView {
    pub fn new(data: RepoData) -> Self {
        let adoptions = detect_adoptions(&data.events);
        let team_size = team_profile(&data.repo_id, &data.commits).team_size as u64;
        RepoView {
            data,
            adoptions,
            team_size,
        }
    }

    pub fn commit_count(&self) -> u64 {
        self.data.commits.len() as u64
    }
}

pub fn load_corpus(store: &EventStore, exec: Execution) -> Result<Vec<RepoView>> {
    par::try_map(store.repos(), exec, |entry| store.load(entry).map(RepoView::new))
}

#[derive(Clone, Debug)]
pub struct AdoptionTables {
    pub adoptions: Vec<AdoptionEvent>,
    pub distributions: DistributionSummary,
    pub stats: AdoptionStats,
}

pub fn adoption_tables(repos: &[RepoView], cfg: &RunConfig) -> AdoptionTables {
    let summaries: Vec<RepoSummary> = repos
        .iter()
        .map(|r| RepoSummary {
            repo_id: r.data.repo_id.clone(),
            commit_count: r.commit_count(),
            team_size: r.team_size,
            adoption_ordinals: r.adoptions.iter().map(|a| a.ordinal).collect(),
        })
        .collect();
    AdoptionTables {
        adoptions: repos.iter().flat_map(|r| r.adoptions.iter().cloned()).collect(),
        distributions: corpus_distributions(&summaries, cfg.horizon),
        stats: adoption_stats(repos.iter().map(|r| (r.data.events.as_slice(), r.adoptions.as_slice()))),
    }
}

#[derive(Clone, Debug)]
pub struct GrowthTables {
    pub series: Vec<GrowthSeries>,
    pub by_team: Vec<GroupCurve>,
    /// `None` without Stack Overflow counts.
    pub by_so: Option<Vec<GroupCurve>>,
}

pub fn growth_tables(
    repos: &[RepoView],
    cfg: &RunConfig,
    so_posts: Option<&BTreeMap<String, u64>>,
    exec: Execution,
) -> Result<GrowthTables> {
    let per_repo = par::try_map(repos, exec, |r| {
        r.adoptions
            .iter()
            .map(|a| {
                let activity = activity_series(a, &r.data.events, r.commit_count() as u32, cfg.horizon, cfg.indexing);
                growth_series(a, &activity, cfg.horizon).map(|s| (r.team_size, s))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let tagged: Vec<(u64, GrowthSeries)> = per_repo.into_iter().flatten().collect();
    let by_team = aggregate_growth(
        &cfg.team_buckets,
        tagged
            .iter()
            .filter_map(|(team, s)| cfg.team_buckets.index_of(*team).map(|i| (i, s))),
    );
    let by_so = so_posts.map(|posts| {
        aggregate_growth(
            &cfg.so_buckets,
            tagged.iter().filter_map(|(_, s)| {
                let n = posts.get(&s.library).copied().unwrap_or(0);
                cfg.so_buckets.index_of(n).map(|i| (i, s))
            }),
        )
    });
    Ok(GrowthTables {
        series: tagged.into_iter().map(|(_, s)| s).collect(),
        by_team,
        by_so,
    })
}

#[derive(Clone, Debug)]
pub struct FightTables {
    /// Grouped by threshold in configuration order, then corpus order.
    pub fights: Vec<Fight>,
    pub report: FightReport,
}

pub fn fight_tables(repos: &[RepoView], cfg: &RunConfig, exec: Execution) -> Result<FightTables> {
    let configs = cfg.fight_configs();
    let per_repo = par::map(repos, exec, |r| {
        let mut found: Vec<Vec<Fight>> = vec![Vec::new(); configs.len()];
        for a in &r.adoptions {
            let rounds = build_rounds(a, &r.data.events);
            for (i, &c) in configs.iter().enumerate() {
                found[i].extend(detect_fight(a, &rounds, c));
            }
        }
        found
    });
    let mut fights = Vec::new();
    for i in 0..configs.len() {
        for repo in &per_repo {
            fights.extend(repo[i].iter().cloned());
        }
    }
    let experience = ExperienceTable::from_commits(repos.iter().flat_map(|r| &r.data.commits));
    let facts: Vec<RepoFacts> = repos
        .iter()
        .map(|r| RepoFacts {
            repo_id: r.data.repo_id.clone(),
            team_size: r.team_size,
            commit_count: r.commit_count(),
        })
        .collect();
    let counts = adoption_counts(repos.iter().flat_map(|r| &r.adoptions));
    let report = fight_stats(&fights, &cfg.epsilons, &facts, &counts, &experience, &cfg.team_buckets)?;
    Ok(FightTables { fights, report })
}

#[derive(Clone, Debug)]
pub struct SoTables {
    pub counts: Vec<SoLibraryCount>,
    pub questions: usize,
    pub malformed: u64,
    pub correlation: Option<Vec<ClassCorrelation>>,
}

/// Counts library mentions in a posts dump and, given the stored corpus,
/// correlates them with per-library user counts.
pub fn so_tables(cfg: &RunConfig, repos: Option<&[RepoView]>, exec: Execution) -> Result<SoTables> {
    let missing = |what: &str| Error::InvalidInput(format!("{what} is required for Stack Overflow ingest"));
    let posts = cfg.so_posts.as_deref().ok_or_else(|| missing("posts dump"))?;
    let classifier = LibraryClassifier::load(
        cfg.standard_libs.as_deref().ok_or_else(|| missing("standard library list"))?,
        cfg.pypi_names.as_deref().ok_or_else(|| missing("PyPI name list"))?,
    )?;
    let file = std::fs::File::open(posts).map_err(|e| Error::io(posts, e))?;
    let dump = parse_posts_dump(BufReader::new(file))?;
    let counts = count_libraries(&dump.posts, &classifier, exec);
    let correlation = repos.map(|repos| {
        let users = user_counts(repos.iter().flat_map(|r| &r.data.events));
        correlate_usage(&counts, &users)
    });
    Ok(SoTables {
        counts,
        questions: dump.posts.len(),
        malformed: dump.malformed,
        correlation,
    })
}

/// Reads a `so_counts.csv` written by [`write_so_csvs`].
pub fn read_so_counts(path: &Path) -> Result<BTreeMap<String, u64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let (library, posts, _class): (String, u64, String) = row?;
        out.insert(library, posts);
    }
    Ok(out)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv buffer: {}", e.error())))
}

fn put(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    write_atomic(&path, bytes)?;
    written.push(path);
    Ok(())
}

fn histogram_rows(h: &Histogram) -> Vec<Vec<String>> {
    h.points
        .iter()
        .map(|p| vec![p.value.to_string(), p.count.to_string(), p.ccdf.to_string()])
        .collect()
}

pub fn write_adoption_csvs(dir: &Path, t: &AdoptionTables) -> Result<Vec<PathBuf>> {
    let mut w = Vec::new();
    let d = &t.distributions;
    let header = ["value", "repos", "ccdf"];
    put(dir, "dist_commits.csv", &csv_bytes(&header, histogram_rows(&d.commits))?, &mut w)?;
    put(dir, "dist_adoptions.csv", &csv_bytes(&header, histogram_rows(&d.adoptions))?, &mut w)?;
    put(dir, "dist_teamsize.csv", &csv_bytes(&header, histogram_rows(&d.team_size))?, &mut w)?;
    let rows = d.per_commit.iter().map(|p| {
        vec![
            p.x.to_string(),
            p.repos.to_string(),
            p.total.to_string(),
            p.mean.to_string(),
            p.median.to_string(),
        ]
    });
    put(
        dir,
        "adoptions_per_commit.csv",
        &csv_bytes(&["x", "repos", "adoptions", "mean", "median"], rows)?,
        &mut w,
    )?;
    let s = &t.stats;
    let rows = [
        ("library_events", s.events.to_string()),
        ("mean_loc_per_event", s.mean_loc.to_string()),
        ("median_loc_per_event", s.median_loc.to_string()),
        ("events_after_adoption", s.after_events.to_string()),
        ("mean_inserted_after_adoption", s.mean_insert_after.to_string()),
        ("mean_deleted_after_adoption", s.mean_delete_after.to_string()),
        ("adoptions", d.total_adoptions.to_string()),
        ("adoptions_beyond_horizon", d.beyond_horizon.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| vec![k.to_owned(), v]);
    put(dir, "adoption_stats.csv", &csv_bytes(&["metric", "value"], rows)?, &mut w)?;
    let rows = t.adoptions.iter().map(|a| {
        vec![
            a.repo_id.clone(),
            a.library.clone(),
            a.ordinal.to_string(),
            a.adopter.to_string(),
            a.initial_loc.to_string(),
        ]
    });
    put(
        dir,
        "adoptions.csv",
        &csv_bytes(&["repo", "library", "ordinal", "adopter", "initial_loc"], rows)?,
        &mut w,
    )?;
    Ok(w)
}

const CURVE_HEADER: [&str; 9] = ["group", "x", "series", "alive", "extinguished", "q1", "median", "q3", "status"];

fn curve_rows(curves: &[GroupCurve]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for c in curves {
        if c.points.is_empty() {
            rows.push(vec![
                c.label.clone(),
                String::new(),
                "0".into(),
                "0".into(),
                "0".into(),
                String::new(),
                String::new(),
                String::new(),
                "empty".into(),
            ]);
        }
        for p in &c.points {
            rows.push(vec![
                c.label.clone(),
                p.x.to_string(),
                c.series.to_string(),
                p.alive.to_string(),
                p.extinguished.to_string(),
                p.quartiles.q1.to_string(),
                p.quartiles.median.to_string(),
                p.quartiles.q3.to_string(),
                "ok".into(),
            ]);
        }
    }
    rows
}

pub fn write_growth_csvs(dir: &Path, t: &GrowthTables, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut w = Vec::new();
    put(dir, "growth_by_teamsize.csv", &csv_bytes(&CURVE_HEADER, curve_rows(&t.by_team))?, &mut w)?;
    let so_rows = match &t.by_so {
        Some(curves) => curve_rows(curves),
        None => cfg
            .so_buckets
            .labels()
            .map(|l| {
                let mut r = vec![String::new(); CURVE_HEADER.len()];
                r[0] = l.to_owned();
                r[8] = "no_so_counts".into();
                r
            })
            .collect(),
    };
    put(dir, "growth_by_so.csv", &csv_bytes(&CURVE_HEADER, so_rows)?, &mut w)?;
    Ok(w)
}

pub fn write_fight_csvs(dir: &Path, t: &FightTables) -> Result<Vec<PathBuf>> {
    let mut w = Vec::new();
    let r = &t.report;
    let rows = r.by_team.iter().map(|x| {
        vec![
            x.epsilon.to_string(),
            x.team_bucket.clone(),
            x.fights.to_string(),
            x.commits.to_string(),
            opt(x.probability),
        ]
    });
    put(
        dir,
        "fight_prob_by_teamsize.csv",
        &csv_bytes(&["epsilon", "team_bucket", "fights", "commits", "fights_per_commit"], rows)?,
        &mut w,
    )?;
    let rows = r.by_experience_gap.iter().map(|x| {
        vec![
            x.epsilon.to_string(),
            x.group.to_string(),
            x.fights.to_string(),
            opt(x.gap_min_secs),
            opt(x.gap_max_secs),
            x.decided.to_string(),
            x.experienced_wins.to_string(),
            opt(x.win_fraction),
        ]
    });
    put(
        dir,
        "fight_winners_by_expgap.csv",
        &csv_bytes(
            &[
                "epsilon",
                "gap_group",
                "fights",
                "gap_min_secs",
                "gap_max_secs",
                "decided",
                "experienced_wins",
                "experienced_win_fraction",
            ],
            rows,
        )?,
        &mut w,
    )?;
    let rows = r.libraries.iter().map(|x| {
        vec![
            x.epsilon.to_string(),
            x.library.clone(),
            x.adoptions.to_string(),
            x.fights.to_string(),
            x.fights_per_1000_adoptions.to_string(),
        ]
    });
    put(
        dir,
        "fought_libraries.csv",
        &csv_bytes(&["epsilon", "library", "adoptions", "fights", "fights_per_1000_adoptions"], rows)?,
        &mut w,
    )?;
    let rows = r.rounds.iter().map(|x| {
        vec![
            x.epsilon.to_string(),
            x.round.to_string(),
            x.role.to_owned(),
            x.fights.to_string(),
            x.mean_net_loc.to_string(),
        ]
    });
    put(
        dir,
        "fight_rounds_loc.csv",
        &csv_bytes(&["epsilon", "round", "role", "fights", "mean_net_loc"], rows)?,
        &mut w,
    )?;
    let rows = r.outcomes.iter().map(|x| {
        vec![
            x.epsilon.to_string(),
            x.fights.to_string(),
            x.deleter_wins.to_string(),
            x.adopter_fought_back.to_string(),
        ]
    });
    put(
        dir,
        "fight_outcomes.csv",
        &csv_bytes(&["epsilon", "fights", "deleter_wins", "adopter_fought_back"], rows)?,
        &mut w,
    )?;
    let rows = t.fights.iter().map(|f| {
        let nets: Vec<String> = f.rounds.iter().map(|r| r.net.to_string()).collect();
        vec![
            f.config.epsilon.to_string(),
            f.repo_id.clone(),
            f.library.clone(),
            f.adoption_ordinal.to_string(),
            f.adopter.to_string(),
            f.deleter.to_string(),
            f.winner.to_string(),
            nets.join(";"),
            f.trigger.to_string(),
        ]
    });
    put(
        dir,
        "fights.csv",
        &csv_bytes(
            &["epsilon", "repo", "library", "adoption_ordinal", "adopter", "deleter", "winner", "round_nets", "trigger_round"],
            rows,
        )?,
        &mut w,
    )?;
    Ok(w)
}

pub fn write_so_csvs(dir: &Path, t: Option<&SoTables>) -> Result<Vec<PathBuf>> {
    let mut w = Vec::new();
    let rows = t.into_iter().flat_map(|t| &t.counts).map(|c| {
        vec![c.library.clone(), c.post_count.to_string(), c.class.to_string()]
    });
    put(dir, "so_counts.csv", &csv_bytes(&["library", "posts", "class"], rows)?, &mut w)?;
    let rows: Vec<Vec<String>> = LibraryClass::ALL
        .into_iter()
        .map(|class| {
            let found = t.and_then(|t| t.correlation.as_ref()).and_then(|c| c.iter().find(|c| c.class == class));
            let (points, fit, status) = match found {
                None => (String::new(), None, "no_usage_counts"),
                Some(c) => match &c.fit {
                    Some(f) => (c.points.to_string(), Some(f), "ok"),
                    None => (c.points.to_string(), None, "too_few_points"),
                },
            };
            vec![
                class.to_string(),
                points,
                opt(fit.map(|f| f.slope)),
                opt(fit.map(|f| f.intercept)),
                opt(fit.map(|f| f.r_squared)),
                opt(fit.map(|f| f.p_value)),
                class.reference_r_squared().to_string(),
                status.to_owned(),
            ]
        })
        .collect();
    put(
        dir,
        "so_correlation.csv",
        &csv_bytes(
            &["class", "points", "slope", "intercept", "r_squared", "p_value", "reference_r_squared", "status"],
            rows,
        )?,
        &mut w,
    )?;
    Ok(w)
}

fn percent(part: u64, whole: u64) -> String {
    if whole == 0 {
        "0".into()
    } else {
        format!("{:.1}", 100.0 * part as f64 / whole as f64)
    }
}

/// The plain-text run summary.
pub fn summary_text(
    repos: &[RepoView],
    adoption: &AdoptionTables,
    growth: Option<&GrowthTables>,
    fights: Option<&FightTables>,
    so: Option<&SoTables>,
) -> String {
    let d = &adoption.distributions;
    let commits: u64 = repos.iter().map(RepoView::commit_count).sum();
    let events: usize = repos.iter().map(|r| r.data.events.len()).sum();
    let n = d.repos;
    let small = (d.commits.fraction_at_most(10) * n as f64).round() as u64;
    let solo = repos.iter().filter(|r| r.team_size == 1).count() as u64;
    let mut s = String::new();
    let _ = writeln!(s, "repositories: {n}");
    let _ = writeln!(s, "commits: {commits}");
    let _ = writeln!(s, "library events: {events}");
    let _ = writeln!(s, "adoptions: {}", d.total_adoptions);
    let _ = writeln!(s, "adoptions beyond horizon: {}", d.beyond_horizon);
    let _ = writeln!(s, "{}% of projects have ≤10 commits", percent(small, n));
    let _ = writeln!(s, "{}% of projects have a single committer", percent(solo, n));
    let _ = writeln!(s, "mean commits per project: {}", opt(d.commits.mean()));
    let _ = writeln!(s, "median commits per project: {}", opt(d.commits.median()));
    let _ = writeln!(s, "median team size: {}", opt(d.team_size.median()));
    let _ = writeln!(s, "median adoptions per project: {}", opt(d.adoptions.median()));
    let st = &adoption.stats;
    let _ = writeln!(
        s,
        "mean lines per library event: {} (median {})",
        st.mean_loc, st.median_loc
    );
    let _ = writeln!(
        s,
        "after adoption: mean {} inserted, {} deleted per event",
        st.mean_insert_after, st.mean_delete_after
    );
    if let Some(g) = growth {
        let count = |t: Termination| g.series.iter().filter(|x| x.termination == t).count();
        let _ = writeln!(
            s,
            "growth series: {} (horizon reached {}, usage extinguished {}, history ended {})",
            g.series.len(),
            count(Termination::HorizonReached),
            count(Termination::UsageExtinguished),
            count(Termination::HistoryEnded)
        );
    }
    if let Some(f) = fights {
        for o in &f.report.outcomes {
            let _ = writeln!(
                s,
                "fights at epsilon {}: {} (deleter won {}, adopter fought back {})",
                o.epsilon, o.fights, o.deleter_wins, o.adopter_fought_back
            );
        }
    }
    if let Some(so) = so {
        let _ = writeln!(
            s,
            "stack overflow: {} python questions, {} libraries, {} malformed rows",
            so.questions,
            so.counts.len(),
            so.malformed
        );
    }
    s
}

pub fn write_summary(dir: &Path, text: &str) -> Result<PathBuf> {
    let path = dir.join("summary.txt");
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs every analysis over a stored corpus and writes all artifacts.
pub fn full_report(store: &EventStore, cfg: &RunConfig, exec: Execution) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.out)?;
    let repos = load_corpus(store, exec)?;
    let adoption = adoption_tables(&repos, cfg);
    let so = match cfg.so_posts {
        Some(_) => Some(so_tables(cfg, Some(&repos), exec)?),
        None => None,
    };
    let so_posts: Option<BTreeMap<String, u64>> = match (&so, &cfg.so_counts) {
        (Some(t), _) => Some(t.counts.iter().map(|c| (c.library.clone(), c.post_count)).collect()),
        (None, Some(path)) => Some(read_so_counts(path)?),
        (None, None) => None,
    };
    let growth = growth_tables(&repos, cfg, so_posts.as_ref(), exec)?;
    let fights = fight_tables(&repos, cfg, exec)?;

    let mut written = write_adoption_csvs(&cfg.out, &adoption)?;
    written.extend(write_growth_csvs(&cfg.out, &growth, cfg)?);
    written.extend(write_fight_csvs(&cfg.out, &fights)?);
    written.extend(write_so_csvs(&cfg.out, so.as_ref())?);
    let text = summary_text(&repos, &adoption, Some(&growth), Some(&fights), so.as_ref());
    written.push(write_summary(&cfg.out, &text)?);
    written.push(cfg.write_to(&cfg.out)?);
    Ok(written)
}
