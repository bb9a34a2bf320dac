use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adoptminer_core::adoption::{Buckets, Indexing};
use adoptminer_core::corpus::read_manifest;
use adoptminer_core::fights::{Comparator, Epsilon};
use adoptminer_core::par::{with_workers, Execution};
use adoptminer_core::report::{self, RunConfig};
use adoptminer_core::store::EventStore;
use adoptminer_core::synth::{generate_corpus, CorpusSpec};
use adoptminer_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Library adoption, growth and code-fight mining over Git patch logs.
#[derive(Parser, Debug)]
#[command(name = "adoptminer", version)]
struct Cli {
    /// Worker threads for per-repository work. ADOPTMINER_WORKERS takes precedence.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, linearize and mine every log of a corpus manifest into an event store.
    Ingest(IngestArgs),
    /// Adoption distributions and per-event statistics.
    Adopt(AnalysisArgs),
    /// Usage growth curves grouped by team size and Stack Overflow popularity.
    Growth(AnalysisArgs),
    /// Code fights and their statistics.
    Fights(AnalysisArgs),
    /// Stack Overflow library counts and the usage correlation.
    So(SoArgs),
    /// Every CSV plus summary.txt.
    Report(ReportArgs),
    /// Generate a synthetic corpus with a ground-truth manifest.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// corpus.jsonl manifest.
    #[arg(long)]
    corpus: PathBuf,
    /// Event store directory (created if absent).
    #[arg(long)]
    store: PathBuf,
    /// Mine the first-parent diff of merge commits too.
    #[arg(long)]
    include_merge_diffs: bool,
    /// Do not count import lines as library lines.
    #[arg(long)]
    no_import_lines: bool,
    /// Maximum shard size in bytes for a new store.
    #[arg(long, default_value_t = adoptminer_core::store::DEFAULT_SHARD_CAP)]
    shard_cap: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IndexingArg {
    All,
    Library,
}

#[derive(Args, Debug)]
struct AnalysisArgs {
    #[arg(long)]
    store: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fight thresholds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    epsilon: Vec<Epsilon>,
    #[arg(long, default_value_t = Comparator::default())]
    comparator: Comparator,
    /// Growth horizon in commits.
    #[arg(long, default_value_t = adoptminer_core::adoption::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value_t = Buckets::team_sizes())]
    team_buckets: Buckets,
    #[arg(long, default_value_t = Buckets::so_posts())]
    so_buckets: Buckets,
    /// Which commits advance the growth curve's x axis.
    #[arg(long, value_enum, default_value = "all")]
    indexing: IndexingArg,
    /// so_counts.csv from an earlier `so` run, for grouping growth curves.
    #[arg(long)]
    so_counts: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SoInputs {
    /// Posts.xml dump (one row per line).
    #[arg(long)]
    posts: Option<PathBuf>,
    /// Standard library module names, one per line.
    #[arg(long)]
    standard_libs: Option<PathBuf>,
    /// PyPI project names, one per line.
    #[arg(long)]
    pypi_names: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SoArgs {
    #[command(flatten)]
    inputs: SoInputs,
    /// Event store for the usage correlation (optional).
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[command(flatten)]
    so: SoInputs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// JSON corpus spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    repos: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Randomly planted fights (scaled with --repos when omitted).
    #[arg(long)]
    random_fights: Option<usize>,
    /// Output directory for repos/, corpus.jsonl and truth.json.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = std::env::var("ADOPTMINER_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .or(cli.workers);
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match with_workers(workers, || run(cli.command, workers, exec)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adoptminer: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Usage(_) => 2,
        Failure::Core(Error::VersionMismatch { .. }) => 3,
        Failure::Core(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => 2,
        Failure::Core(_) => 1,
    }
}

fn require(path: &Path, what: &str) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{what} {} does not exist", path.display())))
    }
}

fn open_store(path: &Path) -> Result<EventStore, Failure> {
    require(path, "store")?;
    if !path.join("store.json").exists() {
        return Err(Failure::Usage(format!("{} is not an event store", path.display())));
    }
    Ok(EventStore::open(path)?)
}

fn analysis_config(a: &AnalysisArgs, workers: Option<usize>) -> Result<RunConfig, Failure> {
    if let Some(p) = &a.so_counts {
        require(p, "Stack Overflow counts")?;
    }
    Ok(RunConfig {
        store: Some(a.store.clone()),
        out: a.out.clone(),
        epsilons: a.epsilon.clone(),
        horizon: a.horizon,
        team_buckets: a.team_buckets.clone(),
        so_buckets: a.so_buckets.clone(),
        comparator: a.comparator,
        indexing: match a.indexing {
            IndexingArg::All => Indexing::AllCommits,
            IndexingArg::Library => Indexing::LibraryCommits,
        },
        workers,
        so_counts: a.so_counts.clone(),
        ..RunConfig::default()
    })
}

fn apply_so(cfg: &mut RunConfig, so: &SoInputs, required: bool) -> Result<(), Failure> {
    let given = [&so.posts, &so.standard_libs, &so.pypi_names];
    if !required && given.iter().all(|p| p.is_none()) {
        return Ok(());
    }
    let names = ["--posts", "--standard-libs", "--pypi-names"];
    for (p, name) in given.iter().zip(names) {
        match p {
            Some(p) => require(p, name)?,
            None => return Err(Failure::Usage(format!("{name} is required"))),
        }
    }
    cfg.so_posts = so.posts.clone();
    cfg.standard_libs = so.standard_libs.clone();
    cfg.pypi_names = so.pypi_names.clone();
    Ok(())
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(command: Command, workers: Option<usize>, exec: Execution) -> Result<(), Failure> {
    match command {
        Command::Ingest(a) => {
            require(&a.corpus, "corpus manifest")?;
            let cfg = RunConfig {
                corpus: Some(a.corpus.clone()),
                store: Some(a.store.clone()),
                include_merge_diffs: a.include_merge_diffs,
                count_import_lines: !a.no_import_lines,
                shard_cap: a.shard_cap,
                workers,
                ..RunConfig::default()
            };
            let entries = read_manifest(&a.corpus)?;
            for e in &entries {
                require(&e.log, "log")?;
            }
            let mut store = report::open_or_create_store(&a.store, cfg.shard_cap)?;
            let r = report::ingest(&entries, &mut store, &cfg.mine_options(), exec)?;
            for (repo, w) in &r.warnings {
                eprintln!("warning: {repo}: {w}");
            }
            println!(
                "ingested {} repositories, {} commits, {} library events ({} warnings)",
                r.repos,
                r.commits,
                r.events,
                r.warnings.len()
            );
        }
        Command::Adopt(a) => {
            let store = open_store(&a.store)?;
            let cfg = analysis_config(&a, workers)?;
            report::ensure_dir(&cfg.out)?;
            let repos = report::load_corpus(&store, exec)?;
            let t = report::adoption_tables(&repos, &cfg);
            let mut w = report::write_adoption_csvs(&cfg.out, &t)?;
            w.push(cfg.write_to(&cfg.out)?);
            print_written(&w);
        }
        Command::Growth(a) => {
            let store = open_store(&a.store)?;
            let cfg = analysis_config(&a, workers)?;
            report::ensure_dir(&cfg.out)?;
            let repos = report::load_corpus(&store, exec)?;
            let so = cfg.so_counts.as_deref().map(report::read_so_counts).transpose()?;
            let t = report::growth_tables(&repos, &cfg, so.as_ref(), exec)?;
            let mut w = report::write_growth_csvs(&cfg.out, &t, &cfg)?;
            w.push(cfg.write_to(&cfg.out)?);
            print_written(&w);
        }
        Command::Fights(a) => {
            let store = open_store(&a.store)?;
            let cfg = analysis_config(&a, workers)?;
            report::ensure_dir(&cfg.out)?;
            let repos = report::load_corpus(&store, exec)?;
            let t = report::fight_tables(&repos, &cfg, exec)?;
            let mut w = report::write_fight_csvs(&cfg.out, &t)?;
            w.push(cfg.write_to(&cfg.out)?);
            print_written(&w);
        }
        Command::So(a) => {
            let mut cfg = RunConfig {
                store: a.store.clone(),
                out: a.out.clone(),
                workers,
                ..RunConfig::default()
            };
            apply_so(&mut cfg, &a.inputs, true)?;
            let repos = match &a.store {
                Some(p) => Some(report::load_corpus(&open_store(p)?, exec)?),
                None => None,
            };
            report::ensure_dir(&cfg.out)?;
            let t = report::so_tables(&cfg, repos.as_deref(), exec)?;
            let mut w = report::write_so_csvs(&cfg.out, Some(&t))?;
            w.push(cfg.write_to(&cfg.out)?);
            print_written(&w);
        }
        Command::Report(a) => {
            let store = open_store(&a.analysis.store)?;
            let mut cfg = analysis_config(&a.analysis, workers)?;
            apply_so(&mut cfg, &a.so, false)?;
            let w = report::full_report(&store, &cfg, exec)?;
            print_written(&w);
        }
        Command::Synth(a) => {
            let mut spec = match &a.spec {
                Some(p) => {
                    require(p, "spec")?;
                    let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                    serde_json::from_str::<CorpusSpec>(&text).map_err(Error::from)?
                }
                None => CorpusSpec::default(),
            };
            if let Some(n) = a.repos {
                spec.repo_count = n;
                if a.random_fights.is_none() {
                    spec.random_fights = n * 3 / 20;
                }
            }
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            if let Some(f) = a.random_fights {
                spec.random_fights = f;
            }
            let corpus = generate_corpus(&spec, exec)?;
            let entries = corpus.write_to(&a.out)?;
            println!(
                "generated {} repositories, {} commits into {}",
                entries.len(),
                corpus.truth.total_commits(),
                a.out.display()
            );
        }
    }
    Ok(())
}
