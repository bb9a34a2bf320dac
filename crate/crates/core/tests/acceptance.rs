//! Acceptance suite. Runs as a plain binary (no libtest harness) so each
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use adoptminer_core::adoption::{activity_series, growth_recurrence, growth_series, Indexing};
use adoptminer_core::author::AuthorId;
use adoptminer_core::corpus::read_manifest;
use adoptminer_core::fights::{build_rounds, detect_fight, Comparator, Epsilon, FightConfig, DEFAULT_EPSILONS};
use adoptminer_core::history::{linearize, parse_git_stream, write_git_stream, CommitRecord, FileDiff};
use adoptminer_core::imports::{mine_repository, LibraryEvent, MineOptions};
use adoptminer_core::par::Execution;
use adoptminer_core::report::{self, RunConfig};
use adoptminer_core::stackoverflow::{
    correlate_usage, count_libraries, parse_posts_dump, LibraryClass, LibraryClassifier, SoLibraryCount,
};
use adoptminer_core::store::EventStore;
use adoptminer_core::synth::{generate_corpus, CorpusSpec};
use common::{adoption, event, oracle_fight, random_dag, round_events};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

fn growth_worked_example() -> Outcome {
    let (values, extinct) = growth_recurrence(&[2, 1, 4, -1], 100).map_err(|s| format!("rejected S0 {s}"))?;
    ensure!(values == [1.0, 1.5, 3.5, 3.0] && !extinct, "recurrence gave {values:?}");
    let a = adoption(2);
    let events: Vec<LibraryEvent> = [2, 1, 4, -1].iter().enumerate().map(|(i, &n)| event(i as u32, "u", n)).collect();
    let activity = activity_series(&a, &events, 4, 100, Indexing::AllCommits);
    let series = growth_series(&a, &activity, 100).map_err(|e| e.to_string())?;
    ensure!(series.values == [1.0, 1.5, 3.5, 3.0], "pipeline gave {:?}", series.values);
    Ok("y = [1, 1.5, 3.5, 3]".into())
}

fn growth_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=150);
        let mut nets = vec![rng.gen_range(1..=200i64)];
        nets.extend((1..len).map(|_| rng.gen_range(-40..=80i64)));
        let (values, _) = growth_recurrence(&nets, 100).map_err(|s| format!("rejected S0 {s}"))?;
        let mut total = nets[0];
        for (x, &y) in values.iter().enumerate().skip(1) {
            total += nets[x];
            let exact = total as f64 / nets[0] as f64;
            worst = worst.max((y - exact).abs() / exact.abs());
        }
    }
    ensure!(worst <= 1e-9, "max relative error {worst:e}");
    Ok(format!("1000 series, max relative error {worst:e}"))
}

fn round_collapsing() -> Outcome {
    let a = adoption(10);
    let events = [event(0, "u", 10), event(1, "v", -5), event(2, "v", -6)];
    let rounds = build_rounds(&a, &events);
    let got: Vec<(&str, i64)> = rounds.iter().map(|r| (r.author.as_str(), r.net)).collect();
    ensure!(got == [("u", 10), ("v", -11)], "rounds {got:?}");
    ensure!(rounds[1].ordinals == [1, 2], "ordinals {:?}", rounds[1].ordinals);
    Ok("-5, -6 -> one round of -11".into())
}

fn fight_oracle_equivalence() -> Outcome {
    let nets: Vec<i64> = (1..=12).flat_map(|n| [n, -n]).collect();
    let mut sequences: Vec<Vec<i64>> = (1..=12).map(|n| vec![n]).collect();
    let mut frontier = sequences.clone();
    for _ in 1..4 {
        frontier = frontier
            .iter()
            .flat_map(|s| {
                nets.iter().map(move |&n| {
                    let mut t = s.clone();
                    t.push(n);
                    t
                })
            })
            .collect();
        sequences.extend(frontier.iter().cloned());
    }
    let mut checked = 0u64;
    let mut fights = 0u64;
    for seq in &sequences {
        let rounds: Vec<(&str, i64)> =
            seq.iter().enumerate().map(|(i, &n)| (if i % 2 == 0 { "u" } else { "v" }, n)).collect();
        let (a, events) = round_events(&rounds);
        let built = build_rounds(&a, &events);
        for comparator in [Comparator::Removal, Comparator::Reduction] {
            for eps in DEFAULT_EPSILONS {
                let cfg = FightConfig {
                    epsilon: Epsilon::new(eps).map_err(|e| e.to_string())?,
                    comparator,
                };
                let want = oracle_fight(&rounds, cfg.epsilon.millionths() as i128, comparator == Comparator::Reduction);
                let got = detect_fight(&a, &built, cfg).map(|f| (f.trigger, f.rounds.len() - 1, f.winner.to_string()));
                let want = want.map(|(t, end)| (t, end, rounds[end].0.to_owned()));
                ensure!(got == want, "{seq:?} at {eps} ({comparator}): got {got:?}, want {want:?}");
                checked += 1;
                fights += got.is_some() as u64;
            }
        }
    }
    Ok(format!("{} sequences, {checked} checks, {fights} fights", sequences.len()))
}

fn random_rounds(rng: &mut ChaCha8Rng) -> Vec<(&'static str, i64)> {
    let mut rounds = vec![("u", rng.gen_range(1..=30i64))];
    let len = rng.gen_range(0..=7);
    while rounds.len() <= len {
        let who = ["u", "v", "v", "w"][rng.gen_range(0..4)];
        let net = rng.gen_range(-30..=30i64);
        if net == 0 || rounds.last().is_some_and(|r| r.0 == who) {
            continue;
        }
        rounds.push((who, net));
    }
    rounds
}

fn epsilon_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid: Vec<FightConfig> = (1..=19)
        .map(|i| FightConfig::new(i as f64 / 20.0).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let mut fights = 0;
    for _ in 0..10_000 {
        let rounds = random_rounds(&mut rng);
        let k = rng.gen_range(2..=25i64);
        let scaled: Vec<(&str, i64)> = rounds.iter().map(|&(w, n)| (w, n * k)).collect();
        let (a, events) = round_events(&rounds);
        let (sa, sevents) = round_events(&scaled);
        let built = build_rounds(&a, &events);
        let sbuilt = build_rounds(&sa, &sevents);
        let mut seen = false;
        for &cfg in &grid {
            let f = detect_fight(&a, &built, cfg);
            ensure!(!seen || f.is_some(), "{rounds:?}: fight lost when raising epsilon to {}", cfg.epsilon);
            seen |= f.is_some();
            let s = detect_fight(&sa, &sbuilt, cfg);
            let key = |f: &Option<adoptminer_core::fights::Fight>| f.as_ref().map(|f| (f.trigger, f.rounds.len(), f.winner.clone()));
            ensure!(key(&f) == key(&s), "{rounds:?} scaled by {k} differs at {}", cfg.epsilon);
        }
        fights += seen as u32;
    }
    Ok(format!("10000 sequences, {fights} with a fight at some epsilon"))
}

fn topological_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for dag in 0..500 {
        let n = rng.gen_range(1..=120);
        let commits = random_dag(&mut rng, n);
        let mut shuffled = commits.clone();
        shuffled.shuffle(&mut rng);
        let a = linearize(commits).map_err(|e| e.to_string())?;
        let b = linearize(shuffled).map_err(|e| e.to_string())?;
        let pos: HashMap<&str, usize> = a.iter().enumerate().map(|(i, c)| (c.hash.as_str(), i)).collect();
        for (i, c) in a.iter().enumerate() {
            ensure!(c.ordinal == Some(i as u32), "dag {dag}: ordinals not dense");
            for p in &c.parent_hashes {
                ensure!(pos[p.as_str()] < i, "dag {dag}: {} placed before parent {p}", c.hash);
            }
        }
        ensure!(
            a.iter().map(|c| &c.hash).eq(b.iter().map(|c| &c.hash)),
            "dag {dag}: order depends on input permutation"
        );
    }
    Ok("500 DAGs".into())
}

fn commit(ordinal: u32, files: Vec<(&str, &[&str], &[&str])>) -> CommitRecord {
    let mut c = CommitRecord::new("fx", common::hash(ordinal as u64), vec![], AuthorId::new("a", "a@x"), ordinal as i64);
    c.ordinal = Some(ordinal);
    for (path, added, deleted) in files {
        let mut d = FileDiff::new(path);
        d.added_lines = added.iter().map(|s| s.to_string()).collect();
        d.deleted_lines = deleted.iter().map(|s| s.to_string()).collect();
        c.diffs.push(d);
    }
    c
}

type Row = (String, u32, u32, bool, bool);

fn mined(commits: &[CommitRecord], ordinal: u32) -> Result<Vec<Row>, String> {
    let events = mine_repository(commits, &MineOptions::default()).map_err(|e| e.to_string())?;
    Ok(events
        .into_iter()
        .filter(|e| e.ordinal == ordinal)
        .map(|e| (e.library, e.added_loc, e.deleted_loc, e.import_added, e.import_removed))
        .collect())
}

fn row(lib: &str, add: u32, del: u32, imp_add: bool, imp_rm: bool) -> Row {
    (lib.to_owned(), add, del, imp_add, imp_rm)
}

fn import_miner_fixtures() -> Outcome {
    let fig = commit(
        0,
        vec![(
            "groups.py",
            &[
                "import numpy as np",
                "from numpy import random as rnd",
                "    bins = np.linspace(df.a.min(),df.a.max(), 10)",
                "    groups = df.groupby(np.digitize(df.a, bins))",
                "    print(groups.mean())",
            ],
            &["import math", "    print('function not implemented')"],
        )],
    );
    let got = mined(&[fig], 0)?;
    ensure!(got == [row("math", 0, 1, false, true), row("numpy", 4, 0, true, false)], "mixed import commit: {got:?}");

    let sub = [commit(
        0,
        vec![(
            "a.py",
            &["import numpy.random as npr", "from numpy.linalg import inv", "x = npr.rand(3)", "y = inv(m)"],
            &[],
        )],
    )];
    let got = mined(&sub, 0)?;
    ensure!(got == [row("numpy", 4, 0, true, false)], "submodules: {got:?}");

    let rebind = [
        commit(0, vec![("a.py", &["import numpy as np", "a = np.ones(2)"], &[])]),
        commit(1, vec![("a.py", &["import cupy as np", "b = np.zeros(2)"], &["import numpy as np"])]),
    ];
    let got = mined(&rebind, 1)?;
    ensure!(
        got == [row("cupy", 2, 0, true, false), row("numpy", 0, 1, false, true)],
        "rebinding: {got:?}"
    );

    let strings = [commit(
        0,
        vec![(
            "a.py",
            &["import numpy as np", "s = 'np.zeros(3)'", "t = f\"{x} np.ones(2)\"", "# np.array([1])", "u = \"\"\"np.eye(2)\"\"\""],
            &[],
        )],
    )];
    let got = mined(&strings, 0)?;
    ensure!(got == [row("numpy", 1, 0, true, false)], "string literals: {got:?}");

    let star = [commit(0, vec![("a.py", &["from pylab import *", "plot(x)", "pylab.show()"], &[])])];
    let got = mined(&star, 0)?;
    ensure!(got == [row("pylab", 1, 0, true, false)], "star import: {got:?}");
    Ok("mixed import commit, submodules, rebinding, strings, star import".into())
}

fn ground_truth_recovery() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = CorpusSpec::default();
    let corpus = generate_corpus(&spec, Execution::Parallel).map_err(|e| e.to_string())?;
    let truth = &corpus.truth;
    corpus.write_to(&tmp.path().join("corpus")).map_err(|e| e.to_string())?;
    let entries = read_manifest(&tmp.path().join("corpus/corpus.jsonl")).map_err(|e| e.to_string())?;
    let mut store = EventStore::create(tmp.path().join("store"), 5_000_000).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        out: tmp.path().join("out"),
        ..RunConfig::default()
    };
    let ingested = report::ingest(&entries, &mut store, &cfg.mine_options(), Execution::Parallel).map_err(|e| e.to_string())?;
    ensure!(ingested.warnings.is_empty(), "{} parse warnings", ingested.warnings.len());
    report::full_report(&store, &cfg, Execution::Parallel).map_err(|e| e.to_string())?;
    let repos = report::load_corpus(&store, Execution::Parallel).map_err(|e| e.to_string())?;
    ensure!(repos.len() == truth.repos.len(), "{} repos stored", repos.len());

    let mut adoptions = 0;
    let mut fights = 0;
    for (r, t) in repos.iter().zip(&truth.repos) {
        ensure!(r.data.repo_id == t.repo_id, "repo order differs");
        let got: BTreeSet<_> = r.adoptions.iter().map(|a| (&a.library, a.ordinal, a.adopter.to_string(), a.initial_loc)).collect();
        let want: BTreeSet<_> = t.adoptions.iter().map(|a| (&a.library, a.ordinal, a.adopter.to_string(), a.initial_loc)).collect();
        ensure!(got == want, "{}: adoptions differ", t.repo_id);
        adoptions += want.len();
        ensure!(r.team_size == t.team.len() as u64, "{}: team {} vs {}", t.repo_id, r.team_size, t.team.len());
    }
    let tables = report::fight_tables(&repos, &cfg, Execution::Parallel).map_err(|e| e.to_string())?;
    for eps in DEFAULT_EPSILONS {
        let got: BTreeMap<_, _> = tables
            .fights
            .iter()
            .filter(|f| f.config.epsilon.value() == eps)
            .map(|f| ((f.repo_id.clone(), f.library.clone()), (f.deleter.to_string(), f.winner.to_string())))
            .collect();
        let want: BTreeMap<_, _> = truth
            .repos
            .iter()
            .flat_map(|r| r.fights.iter().map(move |f| (r, f)))
            .filter(|(_, f)| f.detected_at.contains(&eps))
            .map(|(r, f)| ((r.repo_id.clone(), f.library.clone()), (f.deleter.to_string(), f.winner.to_string())))
            .collect();
        ensure!(got == want, "fights at {eps}: {} found, {} planted", got.len(), want.len());
        fights += want.len();
    }

    let out = tmp.path().join("out");
    let histogram = |values: Vec<u64>| {
        let mut m = BTreeMap::new();
        for v in values {
            *m.entry(v).or_insert(0u64) += 1;
        }
        m
    };
    let read = |name: &str| -> Result<BTreeMap<u64, u64>, String> {
        let mut rdr = csv::Reader::from_path(out.join(name)).map_err(|e| e.to_string())?;
        rdr.deserialize::<(u64, u64, f64)>()
            .map(|r| r.map(|(v, n, _)| (v, n)).map_err(|e| e.to_string()))
            .collect()
    };
    ensure!(
        read("dist_commits.csv")? == histogram(truth.repos.iter().map(|r| r.commit_count).collect()),
        "dist_commits.csv differs"
    );
    ensure!(
        read("dist_teamsize.csv")? == histogram(truth.repos.iter().map(|r| r.team.len() as u64).collect()),
        "dist_teamsize.csv differs"
    );
    ensure!(
        read("dist_adoptions.csv")? == histogram(truth.repos.iter().map(|r| r.adoptions.len() as u64).collect()),
        "dist_adoptions.csv differs"
    );
    let mut rdr = csv::Reader::from_path(out.join("adoptions_per_commit.csv")).map_err(|e| e.to_string())?;
    let mut per_x: BTreeMap<u32, u64> = BTreeMap::new();
    for r in rdr.deserialize::<(u32, u64, u64, f64, f64)>() {
        let (x, _, total, _, _) = r.map_err(|e| e.to_string())?;
        per_x.insert(x, total);
    }
    let mut want_x: BTreeMap<u32, u64> = per_x.keys().map(|&x| (x, 0)).collect();
    for a in truth.repos.iter().flat_map(|r| &r.adoptions) {
        if let Some(n) = want_x.get_mut(&a.ordinal) {
            *n += 1;
        }
    }
    ensure!(per_x == want_x, "adoptions_per_commit.csv differs");
    Ok(format!(
        "{} repos, {} commits, {adoptions} adoptions, {fights} fight detections",
        truth.repos.len(),
        truth.total_commits()
    ))
}

fn stack_overflow_ingest() -> Outcome {
    let dir = fixtures().join("so");
    let file = std::fs::File::open(dir.join("posts.xml")).map_err(|e| e.to_string())?;
    let dump = parse_posts_dump(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
    let summary = std::fs::read_to_string(dir.join("expected_summary.txt")).map_err(|e| e.to_string())?;
    let expect = |key: &str| -> u64 {
        summary
            .lines()
            .find_map(|l| l.strip_prefix(key)?.strip_prefix(": ")?.parse().ok())
            .unwrap_or(u64::MAX)
    };
    ensure!(dump.rows == expect("rows"), "{} rows", dump.rows);
    ensure!(dump.posts.len() as u64 == expect("python_questions"), "{} questions kept", dump.posts.len());
    ensure!(dump.malformed == expect("malformed"), "{} malformed", dump.malformed);
    let classifier =
        LibraryClassifier::load(&dir.join("standard_libs.txt"), &dir.join("pypi_names.txt")).map_err(|e| e.to_string())?;
    let counts = count_libraries(&dump.posts, &classifier, Execution::Parallel);
    let mut rdr = csv::Reader::from_path(dir.join("expected_counts.csv")).map_err(|e| e.to_string())?;
    let want: Vec<(String, u64, String)> = rdr.deserialize().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let got: Vec<(String, u64, String)> =
        counts.iter().map(|c| (c.library.clone(), c.post_count, c.class.to_string())).collect();
    ensure!(got == want, "counts differ: {got:?}");

    let mut doubled = dump.posts.clone();
    for p in &mut doubled {
        let copy = p.code_blocks.clone();
        p.code_blocks.extend(copy);
    }
    ensure!(count_libraries(&doubled, &classifier, Execution::Sequential) == counts, "repeated code changed counts");

    let mut so = Vec::new();
    let mut users = BTreeMap::new();
    for (i, posts) in [3u64, 7, 20, 55, 160, 900, 4000].into_iter().enumerate() {
        let library = format!("lib{i}");
        users.insert(library.clone(), posts * posts);
        so.push(SoLibraryCount {
            library,
            post_count: posts,
            class: LibraryClass::Pypi,
        });
    }
    let corr = correlate_usage(&so, &users);
    let fit = corr
        .iter()
        .find(|c| c.class == LibraryClass::Pypi)
        .and_then(|c| c.fit)
        .ok_or("no fit")?;
    ensure!((fit.slope - 2.0).abs() <= 1e-9, "slope {}", fit.slope);
    ensure!((fit.r_squared - 1.0).abs() <= 1e-9, "r2 {}", fit.r_squared);
    Ok(format!("{} libraries match, slope {}, r2 {}", counts.len(), fit.slope, fit.r_squared))
}

fn dir_bytes(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        out.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn format_round_trips() -> Outcome {
    let spec = CorpusSpec {
        repo_count: 25,
        random_fights: 4,
        seed: 10,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec, Execution::Parallel).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let mut first = EventStore::create(&a, 20_000).map_err(|e| e.to_string())?;
    let mut commits = 0;
    for repo in &corpus.repos {
        let parsed = parse_git_stream(&repo.repo_id, repo.raw_log.as_slice()).map_err(|e| e.to_string())?;
        let mut w1 = Vec::new();
        write_git_stream(&parsed.commits, &mut w1).map_err(|e| e.to_string())?;
        let again = parse_git_stream(&repo.repo_id, w1.as_slice()).map_err(|e| e.to_string())?;
        ensure!(again.commits == parsed.commits, "{}: records changed", repo.repo_id);
        let mut w2 = Vec::new();
        write_git_stream(&again.commits, &mut w2).map_err(|e| e.to_string())?;
        ensure!(w1 == w2, "{}: raw log bytes changed", repo.repo_id);
        commits += parsed.commits.len();
        let linear = linearize(parsed.commits).map_err(|e| e.to_string())?;
        let events = mine_repository(&linear, &MineOptions::default()).map_err(|e| e.to_string())?;
        let data = adoptminer_core::store::RepoData {
            repo_id: repo.repo_id.clone(),
            commits: linear
                .iter()
                .map(|c| adoptminer_core::store::CommitMeta {
                    ordinal: c.ordinal.unwrap_or_default(),
                    hash: c.hash.clone(),
                    author: c.author.key.clone(),
                    ts: c.author_ts,
                    merge: c.is_merge,
                })
                .collect(),
            events,
        };
        first.append_repo(&data).map_err(|e| e.to_string())?;
    }
    let reopened = EventStore::open(&a).map_err(|e| e.to_string())?;
    let mut second = EventStore::create(&b, 20_000).map_err(|e| e.to_string())?;
    for entry in reopened.repos() {
        second.append_repo(&reopened.load(entry).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    }
    ensure!(dir_bytes(&a)? == dir_bytes(&b)?, "store files differ after write-read-write");
    let git = if std::process::Command::new("git").arg("--version").output().is_ok() {
        "real git cross-check in tests/real_git.rs"
    } else {
        "git unavailable"
    };
    Ok(format!("{commits} commits, {} shards; {git}", reopened.shard_count()))
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("growth worked example", Duration::from_millis(1), growth_worked_example),
        ("growth identity", Duration::from_secs(1), growth_identity),
        ("round collapsing", Duration::from_millis(1), round_collapsing),
        ("fight oracle equivalence", Duration::from_secs(30), fight_oracle_equivalence),
        ("epsilon monotonicity and scale invariance", Duration::from_secs(10), epsilon_properties),
        ("topological soundness", Duration::from_secs(10), topological_soundness),
        ("import miner fixtures", Duration::from_secs(1), import_miner_fixtures),
        ("ground truth recovery", Duration::from_secs(60), ground_truth_recovery),
        ("stack overflow ingest", Duration::from_secs(1), stack_overflow_ingest),
        ("format round trips", Duration::from_secs(10), format_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if took <= limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {took:?}, limit {limit:?}"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({took:.2?}): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({took:.2?}): {reason}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
