use std::hint::black_box;

use adoptminer_core::corpus::CorpusEntry;
use adoptminer_core::par::Execution;
use adoptminer_core::report::{self, RunConfig};
use adoptminer_core::store::EventStore;
use adoptminer_core::synth::{generate_corpus, CorpusSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn spec() -> CorpusSpec {
    CorpusSpec {
        repo_count: 80,
        random_fights: 10,
        ..CorpusSpec::default()
    }
}

fn synth(c: &mut Criterion) {
    let spec = spec();
    let mut g = c.benchmark_group("synth");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(generate_corpus(&spec, exec).unwrap()))
        });
    }
    g.finish();
}

fn written_corpus() -> (tempfile::TempDir, Vec<CorpusEntry>) {
    let dir = tempfile::tempdir().unwrap();
    let entries = generate_corpus(&spec(), Execution::Parallel)
        .unwrap()
        .write_to(dir.path())
        .unwrap();
    (dir, entries)
}

fn ingest(c: &mut Criterion) {
    let (dir, entries) = written_corpus();
    let options = RunConfig::default().mine_options();
    let mut g = c.benchmark_group("ingest");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter_with_setup(
                || tempfile::tempdir_in(dir.path()).unwrap(),
                |store_dir| {
                    let mut store = EventStore::create(store_dir.path(), 5_000_000).unwrap();
                    black_box(report::ingest(&entries, &mut store, &options, exec).unwrap());
                },
            )
        });
    }
    g.finish();
}

fn analyses(c: &mut Criterion) {
    let (dir, entries) = written_corpus();
    let cfg = RunConfig::default();
    let mut store = EventStore::create(dir.path().join("store"), 5_000_000).unwrap();
    report::ingest(&entries, &mut store, &cfg.mine_options(), Execution::Parallel).unwrap();
    let repos = report::load_corpus(&store, Execution::Parallel).unwrap();
    let mut g = c.benchmark_group("analyses");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("growth", name), |b| {
            b.iter(|| black_box(report::growth_tables(&repos, &cfg, None, exec).unwrap()))
        });
        g.bench_function(BenchmarkId::new("fights", name), |b| {
            b.iter(|| black_box(report::fight_tables(&repos, &cfg, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, synth, ingest, analyses);
criterion_main!(benches);
