use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::author::{AuthorId, AuthorKey};
use crate::history::{CommitRecord, FileDiff};

use super::catalog::{LibDef, FILE_WORDS, FILLER_FUNCS, VARIABLES};
use super::{AdoptionTruth, CommitTruth, FightPlant, FightTruth, LineDelta, PoolAuthor, RepoTruth};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Initial,
    Regular,
    Branch,
    Main,
    Merge,
    Dangling,
    Plant { plant: usize, step: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Adopter,
    Deleter,
    ThirdParty,
}

#[derive(Clone, Copy, Debug)]
struct Step {
    role: Role,
    net: i64,
}

fn plant_steps(plant: &FightPlant) -> Vec<Step> {
    let mut steps = Vec::new();
    for (r, round) in plant.rounds.iter().enumerate() {
        let role = if r % 2 == 0 { Role::Adopter } else { Role::Deleter };
        steps.extend(round.iter().map(|&net| Step { role, net }));
    }
    if plant.third_party {
        steps.push(Step {
            role: Role::ThirdParty,
            net: 2,
        });
    }
    steps
}

pub(super) fn plant_commit_count(plant: &FightPlant) -> usize {
    plant_steps(plant).len()
}

/// Everything about one repository decided before its content is generated.
#[derive(Clone, Debug)]
pub(super) struct RepoPlan {
    pub repo_id: String,
    pub commits: usize,
    /// Indices into the author pool; the first one founds the repository.
    pub members: Vec<usize>,
    /// Slot of the branch commit; the main-line sibling and the merge follow.
    pub branch_at: Option<usize>,
    pub dangling: bool,
    pub plants: Vec<FightPlant>,
    pub stream: u64,
}

impl RepoPlan {
    pub fn regular_capacity(&self) -> usize {
        self.commits - 1 - if self.branch_at.is_some() { 3 } else { 0 } - usize::from(self.dangling)
    }
}

#[derive(Clone, Debug)]
enum Call {
    /// `prefix.func(arg)`; prefix is the token or `token.sub`.
    Module { lib: usize, prefix: String },
    /// `token(arg)`.
    Symbol { lib: usize },
}

impl Call {
    fn lib(&self) -> usize {
        match *self {
            Call::Module { lib, .. } | Call::Symbol { lib } => lib,
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Import { tokens: Vec<String>, removable: bool },
    Use { tokens: Vec<String> },
    Plain,
}

#[derive(Clone, Debug)]
struct Line {
    id: u64,
    text: String,
    libs: Vec<usize>,
    kind: Kind,
}

#[derive(Clone, Debug)]
struct File {
    path: String,
    lines: Vec<Line>,
    live: BTreeMap<String, Call>,
    locked: bool,
}

impl File {
    fn is_python(&self) -> bool {
        self.path.ends_with(".py")
    }
}

#[derive(Default)]
struct Change {
    added: Vec<Line>,
    deleted: Vec<Line>,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    libs: &'a [LibDef],
    lib_weights: Vec<f64>,
    files: Vec<File>,
    next_line: u64,
    commit_floor: u64,
    adopter: BTreeMap<usize, usize>,
    reserved: BTreeSet<usize>,
    pkg: String,
    changes: BTreeMap<usize, Change>,
}

impl<'a> Gen<'a> {
    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(&mut self.rng).expect("non-empty choice")
    }

    fn begin_commit(&mut self) {
        self.commit_floor = self.next_line;
        self.changes.clear();
    }

    /// Diffs and per-library line counts of the commit in progress.
    fn end_commit(&mut self, author: usize) -> (Vec<FileDiff>, BTreeMap<String, LineDelta>) {
        let mut diffs = Vec::new();
        let mut libs: BTreeMap<usize, LineDelta> = BTreeMap::new();
        for (&f, change) in &self.changes {
            if change.added.is_empty() && change.deleted.is_empty() {
                continue;
            }
            let file = &self.files[f];
            let mut d = FileDiff::new(file.path.clone());
            d.added_lines = change.added.iter().map(|l| l.text.clone()).collect();
            d.deleted_lines = change.deleted.iter().map(|l| l.text.clone()).collect();
            diffs.push(d);
            if file.is_python() {
                for l in &change.added {
                    for &lib in &l.libs {
                        libs.entry(lib).or_default().add += 1;
                    }
                }
                for l in &change.deleted {
                    for &lib in &l.libs {
                        libs.entry(lib).or_default().del += 1;
                    }
                }
            }
        }
        for (&lib, delta) in &libs {
            if delta.add > 0 {
                self.adopter.entry(lib).or_insert(author);
            }
        }
        let named = libs
            .into_iter()
            .map(|(lib, d)| (self.libs[lib].name.to_owned(), d))
            .collect();
        (diffs, named)
    }

    fn new_file(&mut self, locked: bool, stem: Option<&str>) -> usize {
        let word = match stem {
            Some(s) => s.to_owned(),
            None => self.pick(FILE_WORDS).to_owned(),
        };
        let path = format!("src/{}/{}_{}.py", self.pkg, word, self.files.len());
        self.files.push(File {
            path,
            lines: Vec::new(),
            live: BTreeMap::new(),
            locked,
        });
        self.files.len() - 1
    }

    fn readme(&mut self) -> usize {
        match self.files.iter().position(|f| f.path == "README.md") {
            Some(i) => i,
            None => {
                self.files.push(File {
                    path: "README.md".into(),
                    lines: Vec::new(),
                    live: BTreeMap::new(),
                    locked: false,
                });
                self.files.len() - 1
            }
        }
    }

    fn add(&mut self, file: usize, text: String, libs: Vec<usize>, kind: Kind) {
        let line = Line {
            id: self.next_line,
            text,
            libs,
            kind,
        };
        self.next_line += 1;
        self.changes.entry(file).or_default().added.push(line.clone());
        self.files[file].lines.push(line);
    }

    fn delete(&mut self, file: usize, id: u64) {
        let f = &mut self.files[file];
        let pos = f.lines.iter().position(|l| l.id == id).expect("line exists");
        let line = f.lines.remove(pos);
        if let Kind::Import { tokens, .. } = &line.kind {
            for t in tokens {
                f.live.remove(t);
            }
        }
        self.changes.entry(file).or_default().deleted.push(line);
    }

    fn old(&self, line: &Line) -> bool {
        line.id < self.commit_floor
    }

    fn open_python_files(&self) -> Vec<usize> {
        (0..self.files.len())
            .filter(|&i| !self.files[i].locked && self.files[i].is_python())
            .collect()
    }

    fn weighted_lib(&mut self, candidates: &[usize]) -> Option<usize> {
        if candidates.is_empty() {
            return None;
        }
        let w: Vec<f64> = candidates.iter().map(|&l| self.lib_weights[l]).collect();
        let idx = WeightedIndex::new(&w).ok()?.sample(&mut self.rng);
        Some(candidates[idx])
    }

    /// Writes one import statement for `lib` into `file`, choosing among the
    /// forms whose bound names are free there.
    fn import(&mut self, file: usize, lib: usize, usable_only: bool) -> bool {
        let d = self.libs[lib];
        let free = |f: &File, t: &str| !f.live.contains_key(t);
        let f = &self.files[file];
        let mut forms: Vec<(String, Vec<(String, Call)>)> = Vec::new();
        let module = |prefix: &str| Call::Module {
            lib,
            prefix: prefix.to_owned(),
        };
        if free(f, d.name) {
            forms.push((format!("import {}", d.name), vec![(d.name.into(), module(d.name))]));
            if let Some(sub) = d.sub {
                let p = format!("{}.{}", d.name, sub);
                forms.push((format!("import {p}"), vec![(d.name.into(), module(&p))]));
            }
        }
        if let Some(a) = d.alias.filter(|a| free(f, a)) {
            forms.push((format!("import {} as {a}", d.name), vec![(a.into(), module(a))]));
        }
        let [s0, s1] = d.symbols;
        for s in [s0, s1].into_iter().filter(|s| free(f, s)) {
            forms.push((format!("from {} import {s}", d.name), vec![(s.into(), Call::Symbol { lib })]));
            if let Some(sub) = d.sub {
                forms.push((
                    format!("from {}.{sub} import {s}", d.name),
                    vec![(s.into(), Call::Symbol { lib })],
                ));
            }
        }
        if free(f, s0) && free(f, s1) {
            let both = vec![(s0.into(), Call::Symbol { lib }), (s1.into(), Call::Symbol { lib })];
            forms.push((format!("from {} import {s0}, {s1}", d.name), both.clone()));
            forms.push((format!("from {} import ({s0}, {s1})", d.name), both));
        }
        if !usable_only {
            forms.push((format!("from {} import *", d.name), Vec::new()));
        }
        if forms.is_empty() {
            return false;
        }
        let (mut text, tokens) = forms.swap_remove(self.rng.gen_range(0..forms.len()));
        if self.rng.gen_bool(0.1) {
            text.push_str("  # noqa");
        }
        let names: Vec<String> = tokens.iter().map(|(t, _)| t.clone()).collect();
        for (t, call) in tokens {
            self.files[file].live.insert(t, call);
        }
        self.add(
            file,
            text,
            vec![lib],
            Kind::Import {
                tokens: names,
                removable: true,
            },
        );
        true
    }

    fn import_pair(&mut self, file: usize, a: usize, b: usize) -> bool {
        let (na, nb) = (self.libs[a].name, self.libs[b].name);
        let f = &self.files[file];
        if f.live.contains_key(na) || f.live.contains_key(nb) {
            return false;
        }
        for (n, lib) in [(na, a), (nb, b)] {
            self.files[file].live.insert(
                n.into(),
                Call::Module {
                    lib,
                    prefix: n.into(),
                },
            );
        }
        self.add(
            file,
            format!("import {na}, {nb}"),
            vec![a, b],
            Kind::Import {
                tokens: vec![na.into(), nb.into()],
                removable: false,
            },
        );
        true
    }

    fn call_text(&mut self, token: &str, call: &Call, inner: &str) -> String {
        match call {
            Call::Module { lib, prefix } => {
                let func = self.pick(&self.libs[*lib].funcs);
                format!("{prefix}.{func}({inner})")
            }
            Call::Symbol { .. } => format!("{token}({inner})"),
        }
    }

    fn use_line(&mut self, file: usize, tokens: &[String]) {
        let var = self.pick(VARIABLES);
        let mut expr = self.pick(VARIABLES).to_owned();
        let mut libs = Vec::new();
        for t in tokens.iter().rev() {
            let call = self.files[file].live[t].clone();
            expr = self.call_text(t, &call, &expr);
            if !libs.contains(&call.lib()) {
                libs.push(call.lib());
            }
        }
        libs.sort_unstable();
        let indent = if self.rng.gen_bool(0.4) { "    " } else { "" };
        self.add(
            file,
            format!("{indent}{var} = {expr}"),
            libs,
            Kind::Use {
                tokens: tokens.to_vec(),
            },
        );
    }

    fn tokens_of(&self, file: usize, lib: usize) -> Vec<String> {
        self.files[file]
            .live
            .iter()
            .filter(|(_, c)| c.lib() == lib)
            .map(|(t, _)| t.clone())
            .collect()
    }

    fn add_uses(&mut self, file: usize, lib: usize, n: usize) {
        let tokens = self.tokens_of(file, lib);
        for _ in 0..n {
            let t = tokens.choose(&mut self.rng).expect("lib has live tokens").clone();
            self.use_line(file, &[t]);
        }
    }

    fn filler_line(&mut self) -> String {
        let v = self.pick(VARIABLES);
        let w = self.pick(VARIABLES);
        let d = self.libs[self.rng.gen_range(0..self.libs.len())];
        let tok = d.alias.unwrap_or(d.name);
        let func = self.pick(&d.funcs);
        match self.rng.gen_range(0..8) {
            0 => format!("{v} = {w} + {}", self.rng.gen_range(1..100)),
            1 => format!("def {}_{}({v}):", self.pick(FILLER_FUNCS), self.rng.gen_range(0..50)),
            2 => format!("    return {v}"),
            3 => format!("print(\"{tok}.{func}({v})\")"),
            4 => format!("# {tok}.{func}({v})"),
            5 => format!("msg = 'import {}'", d.name),
            6 => format!("{v}.{func}({w})"),
            _ => format!("label = f\"{tok}.{func}({{{v}}})\""),
        }
    }

    fn act_filler(&mut self) {
        let file = if self.rng.gen_bool(0.15) {
            self.readme()
        } else {
            let open = self.open_python_files();
            if open.is_empty() {
                self.new_file(false, None)
            } else {
                self.pick(&open[..])
            }
        };
        if self.files[file].path == "README.md" {
            let d = self.libs[self.rng.gen_range(0..self.libs.len())];
            let text = match self.rng.gen_range(0..3) {
                0 => format!("    import {}", d.name),
                1 => format!("import {} as {}", d.name, d.alias.unwrap_or("lib")),
                _ => format!("pip install {}", d.name),
            };
            self.add(file, text, Vec::new(), Kind::Plain);
            return;
        }
        for _ in 0..self.rng.gen_range(1..=3) {
            let text = self.filler_line();
            self.add(file, text, Vec::new(), Kind::Plain);
        }
        if self.rng.gen_bool(0.25) {
            let open = self.open_python_files();
            let f = self.pick(&open[..]);
            let plain: Vec<u64> = self.files[f]
                .lines
                .iter()
                .filter(|l| matches!(l.kind, Kind::Plain) && self.old(l))
                .map(|l| l.id)
                .collect();
            for id in plain.choose_multiple(&mut self.rng, 2).copied().collect::<Vec<_>>() {
                self.delete(f, id);
            }
        }
    }

    fn usable_libs(&self, adopted: Option<bool>) -> Vec<usize> {
        (0..self.libs.len())
            .filter(|l| !self.reserved.contains(l))
            .filter(|l| adopted.is_none_or(|a| self.adopter.contains_key(l) == a))
            .collect()
    }

    fn act_adopt(&mut self, adopted: Option<bool>, file: Option<usize>) -> bool {
        let candidates = self.usable_libs(adopted);
        let Some(lib) = self.weighted_lib(&candidates) else {
            return false;
        };
        let file = match file {
            Some(f) => f,
            None => {
                let open = self.open_python_files();
                if open.is_empty() || self.rng.gen_bool(0.35) {
                    self.new_file(false, None)
                } else {
                    self.pick(&open[..])
                }
            }
        };
        if self.rng.gen_bool(0.1) {
            let others: Vec<usize> = self.usable_libs(None).into_iter().filter(|&l| l != lib).collect();
            if let Some(other) = self.weighted_lib(&others) {
                if self.import_pair(file, lib, other) {
                    if self.rng.gen_bool(0.5) {
                        let (a, b) = (self.libs[lib].name.to_owned(), self.libs[other].name.to_owned());
                        self.use_line(file, &[a, b]);
                    }
                    return true;
                }
            }
        }
        if !self.import(file, lib, false) {
            return false;
        }
        if !self.tokens_of(file, lib).is_empty() {
            let n = self.rng.gen_range(0..=4);
            self.add_uses(file, lib, n);
        }
        true
    }

    fn act_add_uses(&mut self) -> bool {
        let files: Vec<usize> = self
            .open_python_files()
            .into_iter()
            .filter(|&f| !self.files[f].live.is_empty())
            .collect();
        if files.is_empty() {
            return false;
        }
        let f = self.pick(&files[..]);
        let live: Vec<(String, usize)> = self.files[f].live.iter().map(|(t, c)| (t.clone(), c.lib())).collect();
        let (token, lib) = live.choose(&mut self.rng).cloned().expect("live tokens");
        let n = self.rng.gen_range(1..=4);
        self.add_uses(f, lib, n);
        if self.rng.gen_bool(0.2) {
            if let Some((other, _)) = live.iter().find(|(_, l)| *l != lib).cloned() {
                self.use_line(f, &[token, other]);
            }
        }
        true
    }

    fn sole_lib_owned_by(&self, line: &Line, author: usize) -> bool {
        line.libs.len() == 1 && self.adopter.get(&line.libs[0]) == Some(&author) && self.old(line)
    }

    fn act_trim(&mut self, author: usize) -> bool {
        let mut cands = Vec::new();
        for f in self.open_python_files() {
            for l in &self.files[f].lines {
                if matches!(l.kind, Kind::Use { .. }) && self.sole_lib_owned_by(l, author) {
                    cands.push((f, l.id));
                }
            }
        }
        let Some(&(f, _)) = cands.choose(&mut self.rng) else {
            return false;
        };
        let same: Vec<u64> = cands.iter().filter(|c| c.0 == f).map(|c| c.1).collect();
        let n = self.rng.gen_range(1..=3);
        for id in same.choose_multiple(&mut self.rng, n).copied().collect::<Vec<_>>() {
            self.delete(f, id);
        }
        true
    }

    fn act_remove_import(&mut self, author: usize) -> bool {
        let mut cands = Vec::new();
        for f in self.open_python_files() {
            let file = &self.files[f];
            for l in &file.lines {
                let Kind::Import { tokens, removable: true } = &l.kind else {
                    continue;
                };
                if !self.sole_lib_owned_by(l, author) {
                    continue;
                }
                let users: Vec<&Line> = file
                    .lines
                    .iter()
                    .filter(|u| matches!(&u.kind, Kind::Use { tokens: ut } if ut.iter().any(|t| tokens.contains(t))))
                    .collect();
                if users.iter().all(|u| self.sole_lib_owned_by(u, author)) {
                    let mut ids: Vec<u64> = users.iter().map(|u| u.id).collect();
                    ids.push(l.id);
                    cands.push((f, ids));
                }
            }
        }
        let Some((f, ids)) = cands.choose(&mut self.rng).cloned() else {
            return false;
        };
        for id in ids {
            self.delete(f, id);
        }
        true
    }

    fn regular(&mut self, author: usize) {
        let r: f64 = self.rng.gen();
        let done = if r < 0.16 {
            self.act_adopt(Some(false), None)
        } else if r < 0.24 {
            self.act_adopt(Some(true), None)
        } else if r < 0.58 {
            self.act_add_uses()
        } else if r < 0.68 {
            self.act_trim(author)
        } else if r < 0.73 {
            self.act_remove_import(author)
        } else {
            false
        };
        if !done || self.rng.gen_bool(0.3) {
            self.act_filler();
        }
    }

    fn plant_step(&mut self, file: usize, lib: usize, net: i64) {
        if net > 0 {
            let mut n = net as usize;
            if self.tokens_of(file, lib).is_empty() {
                assert!(self.import(file, lib, true), "plant file has free names");
                n -= 1;
            }
            self.add_uses(file, lib, n);
        } else {
            for _ in 0..net.unsigned_abs() {
                let lines = &self.files[file].lines;
                let victim = lines
                    .iter()
                    .find(|l| matches!(l.kind, Kind::Use { .. }))
                    .or_else(|| lines.first())
                    .expect("plant never deletes more than it has")
                    .id;
                self.delete(file, victim);
            }
        }
    }
}

fn hash(rng: &mut ChaCha8Rng) -> String {
    format!("{:016x}{:016x}{:08x}", rng.gen::<u64>(), rng.gen::<u64>(), rng.gen::<u32>())
}

fn identity(rng: &mut ChaCha8Rng, a: &PoolAuthor) -> AuthorId {
    if rng.gen_bool(0.15) {
        let shouty: String = a
            .email
            .split('@')
            .enumerate()
            .map(|(i, part)| if i == 0 { capitalize(part) } else { part.to_uppercase() })
            .collect::<Vec<_>>()
            .join("@");
        AuthorId::new(a.name.to_lowercase(), shouty)
    } else {
        AuthorId::new(a.name.clone(), a.email.clone())
    }
}

fn capitalize(s: &str) -> String {
    s.split('.')
        .map(|p| {
            let mut c = p.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        })
        .collect::<Vec<String>>()
        .join(".")
}

/// Round-level fight outcome at ε = `tenths`/10, by integer arithmetic on the
/// planted round totals.
pub(super) fn planted_fight_detected(rounds: &[i64], tenths: i64) -> bool {
    let mut running = Vec::with_capacity(rounds.len());
    let mut s = 0;
    for r in rounds {
        s += r;
        running.push(s);
    }
    (1..running.len())
        .step_by(2)
        .any(|r| running[r - 1] > 0 && 10 * running[r] <= tenths * running[r - 1])
}

pub(super) struct RepoOutput {
    pub commits: Vec<CommitRecord>,
    pub truth: RepoTruth,
}

pub(super) fn generate_repo(
    plan: &RepoPlan,
    pool: &[PoolAuthor],
    libs: &[LibDef],
    out_of_order: f64,
    mut rng: ChaCha8Rng,
) -> RepoOutput {
    let n = plan.commits;
    let members = &plan.members;

    let mut slots = vec![Slot::Regular; n];
    slots[0] = Slot::Initial;
    if plan.dangling {
        slots[n - 1] = Slot::Dangling;
    }
    if let Some(b) = plan.branch_at {
        slots[b] = Slot::Branch;
        slots[b + 1] = Slot::Main;
        slots[b + 2] = Slot::Merge;
    }
    let steps: Vec<Vec<Step>> = plan.plants.iter().map(plant_steps).collect();
    let total_steps: usize = steps.iter().map(Vec::len).sum();
    let regular: Vec<usize> = (1..n).filter(|&s| slots[s] == Slot::Regular).collect();
    let mut chosen: Vec<usize> = regular.choose_multiple(&mut rng, total_steps).copied().collect();
    chosen.sort_unstable();
    let mut it = chosen.into_iter();
    for (p, st) in steps.iter().enumerate() {
        for step in 0..st.len() {
            slots[it.next().expect("capacity checked when planning")] = Slot::Plant { plant: p, step };
        }
    }

    let mut gen = Gen {
        libs,
        lib_weights: (0..libs.len()).map(|i| 1.0 / (i as f64 + 1.0)).collect(),
        files: Vec::new(),
        next_line: 0,
        commit_floor: 0,
        adopter: BTreeMap::new(),
        reserved: BTreeSet::new(),
        pkg: plan.repo_id.replace('-', "_"),
        changes: BTreeMap::new(),
        rng,
    };

    struct PlantState {
        lib: usize,
        file: Option<usize>,
        cast: [usize; 3],
    }
    let mut plant_state = Vec::new();
    for plant in &plan.plants {
        let free: Vec<usize> = (0..libs.len()).filter(|l| !gen.reserved.contains(l)).collect();
        let lib = gen.pick(&free[..]);
        gen.reserved.insert(lib);
        let need = if plant.third_party { 3 } else { 2 };
        let picked: Vec<usize> = members.choose_multiple(&mut gen.rng, need).copied().collect();
        let cast = [picked[0], picked[1], picked.get(2).copied().unwrap_or(picked[0])];
        plant_state.push(PlantState { lib, file: None, cast });
    }

    let weights: Vec<f64> = (0..members.len()).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let member_dist = WeightedIndex::new(&weights).expect("at least one member");

    let start: i64 = 1_262_304_000 + gen.rng.gen_range(0..300_000_000);
    let mut clock = start;
    let mut hashes: Vec<String> = Vec::with_capacity(n);
    let mut stamps: Vec<i64> = Vec::with_capacity(n);
    let mut head: Option<usize> = None;
    let mut branch_file = None;
    let mut branch_diffs: Vec<FileDiff> = Vec::new();
    let mut commits = Vec::with_capacity(n);
    let mut truths = Vec::with_capacity(n);

    for (s, &slot) in slots.iter().enumerate() {
        let author = match slot {
            Slot::Initial => members[0],
            Slot::Plant { plant, step } => {
                let cast = plant_state[plant].cast;
                match steps[plant][step].role {
                    Role::Adopter => cast[0],
                    Role::Deleter => cast[1],
                    Role::ThirdParty => cast[2],
                }
            }
            _ => members[member_dist.sample(&mut gen.rng)],
        };
        let gap = gen.rng.gen_range(300..3 * 86_400);
        let (parents, ts): (Vec<usize>, i64) = match slot {
            Slot::Initial => (Vec::new(), start),
            Slot::Branch | Slot::Main => {
                clock += gap;
                (head.into_iter().collect(), clock)
            }
            Slot::Merge => {
                clock += gap;
                (vec![s - 1, s - 2], clock)
            }
            Slot::Dangling => {
                clock += gap;
                let mainline: Vec<usize> = (0..s).filter(|&j| slots[j] != Slot::Branch).collect();
                (vec![gen.pick(&mainline[..])], clock)
            }
            _ => {
                let p = head.expect("non-initial slot has a parent");
                if gen.rng.gen_bool(out_of_order) {
                    (vec![p], stamps[p] - gen.rng.gen_range(60..7_200))
                } else {
                    clock += gap;
                    (vec![p], clock)
                }
            }
        };

        gen.begin_commit();
        let merge = slot == Slot::Merge;
        let (diffs, libs_delta) = if merge {
            (std::mem::take(&mut branch_diffs), BTreeMap::new())
        } else {
            match slot {
                Slot::Initial => {
                    let f = gen.new_file(false, Some("main"));
                    gen.act_adopt(Some(false), Some(f));
                    gen.act_filler();
                }
                Slot::Branch => {
                    let f = gen.new_file(true, Some("feature"));
                    branch_file = Some(f);
                    if !gen.act_adopt(None, Some(f)) {
                        let text = gen.filler_line();
                        gen.add(f, text, Vec::new(), Kind::Plain);
                    }
                }
                Slot::Dangling => {
                    let f = gen.new_file(false, Some("experiment"));
                    if !gen.act_adopt(None, Some(f)) {
                        let text = gen.filler_line();
                        gen.add(f, text, Vec::new(), Kind::Plain);
                    }
                }
                Slot::Plant { plant, step } => {
                    let ps = &plant_state[plant];
                    let (lib, file) = (ps.lib, ps.file);
                    let file = file.unwrap_or_else(|| {
                        let stem = format!("{}_ops", libs[lib].name);
                        let f = gen.new_file(true, Some(&stem));
                        plant_state[plant].file = Some(f);
                        f
                    });
                    gen.plant_step(file, lib, steps[plant][step].net);
                }
                Slot::Main | Slot::Regular => gen.regular(author),
                Slot::Merge => unreachable!(),
            }
            let out = gen.end_commit(author);
            if slot == Slot::Branch {
                branch_diffs = out.0.clone();
            }
            out
        };
        if merge {
            if let Some(f) = branch_file.take() {
                gen.files[f].locked = false;
            }
        }

        let h = hash(&mut gen.rng);
        let parent_hashes: Vec<String> = parents.iter().map(|&p| hashes[p].clone()).collect();
        let id = identity(&mut gen.rng, &pool[author]);
        let mut rec = CommitRecord::new(&plan.repo_id, &h, parent_hashes.clone(), id.clone(), ts);
        rec.diffs = diffs;
        commits.push(rec);
        truths.push(CommitTruth {
            ordinal: s as u32,
            hash: h.clone(),
            parents: parent_hashes,
            author: id.key,
            ts,
            merge,
            libs: libs_delta,
        });
        hashes.push(h);
        stamps.push(ts);
        if !matches!(slot, Slot::Branch | Slot::Dangling) {
            head = Some(s);
        }
    }

    let mut adoptions: Vec<AdoptionTruth> = Vec::new();
    let mut seen = BTreeSet::new();
    for c in &truths {
        for (lib, d) in &c.libs {
            if d.add > 0 && seen.insert(lib.clone()) {
                adoptions.push(AdoptionTruth {
                    library: lib.clone(),
                    ordinal: c.ordinal,
                    adopter: c.author.clone(),
                    initial_loc: d.add,
                });
            }
        }
    }

    let key = |m: usize| AuthorKey::new(pool[m].email.to_lowercase());
    let fights = plan
        .plants
        .iter()
        .zip(&plant_state)
        .map(|(plant, ps)| {
            let rounds: Vec<i64> = plant.rounds.iter().map(|r| r.iter().sum()).collect();
            let winner = ps.cast[(rounds.len() + 1) % 2];
            FightTruth {
                library: libs[ps.lib].name.to_owned(),
                adopter: key(ps.cast[0]),
                deleter: key(ps.cast[1]),
                third_party: plant.third_party.then(|| key(ps.cast[2])),
                winner: key(winner),
                target_epsilon: plant.epsilon,
                detected_at: (1..=5)
                    .filter(|&t| planted_fight_detected(&rounds, t))
                    .map(|t| t as f64 / 10.0)
                    .collect(),
                rounds,
            }
        })
        .collect();

    let team: BTreeSet<AuthorKey> = truths.iter().map(|c| c.author.clone()).collect();
    RepoOutput {
        commits,
        truth: RepoTruth {
            repo_id: plan.repo_id.clone(),
            commit_count: n as u64,
            team: team.into_iter().collect(),
            commits: truths,
            adoptions,
            fights,
        },
    }
}
