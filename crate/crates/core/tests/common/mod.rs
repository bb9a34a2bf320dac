#![allow(dead_code)]

use adoptminer_core::adoption::AdoptionEvent;
use adoptminer_core::author::AuthorId;
use adoptminer_core::history::CommitRecord;
use adoptminer_core::imports::LibraryEvent;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn hash(i: u64) -> String {
    format!("{:040x}", i.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xabcdef)
}

/// A random commit DAG whose parents always precede their children in
/// generation order, returned shuffled. Timestamps are deliberately noisy so
/// children are often older than their parents.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize) -> Vec<CommitRecord> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut parents = Vec::new();
        if i > 0 {
            let k = match rng.gen_range(0..10) {
                0 => 0,
                1 | 2 => 2,
                _ => 1,
            };
            for _ in 0..k {
                parents.push(hash(rng.gen_range(0..i) as u64));
            }
            parents.dedup();
        }
        let ts = rng.gen_range(0..50);
        out.push(CommitRecord::new(
            "dag",
            hash(i as u64),
            parents,
            AuthorId::new("a", "a@x"),
            ts,
        ));
    }
    out.shuffle(rng);
    out
}

pub fn adoption(initial_loc: u32) -> AdoptionEvent {
    AdoptionEvent {
        repo_id: "p".into(),
        library: "lib".into(),
        ordinal: 0,
        adopter: "u".into(),
        initial_loc,
    }
}

pub fn event(ordinal: u32, author: &str, net: i64) -> LibraryEvent {
    LibraryEvent {
        repo_id: "p".into(),
        ordinal,
        author: author.into(),
        library: "lib".into(),
        added_loc: net.max(0) as u32,
        deleted_loc: (-net).max(0) as u32,
        import_added: false,
        import_removed: false,
    }
}

/// Events for a round sequence: round 0 is the adoption by `u`, every later
/// round is one commit by the given author.
pub fn round_events(rounds: &[(&str, i64)]) -> (AdoptionEvent, Vec<LibraryEvent>) {
    let a = adoption(rounds[0].1 as u32);
    let mut events = vec![event(0, rounds[0].0, rounds[0].1)];
    for (i, &(who, net)) in rounds.iter().enumerate().skip(1) {
        events.push(event(i as u32 * 2, who, net));
    }
    (a, events)
}

/// Brute-force fight check over already collapsed rounds. Returns the
/// trigger round and the index of the final fight round.
pub fn oracle_fight(rounds: &[(&str, i64)], eps_ppm: i128, reduction: bool) -> Option<(usize, usize)> {
    if rounds.len() < 2 {
        return None;
    }
    let (u, v) = (rounds[0].0, rounds[1].0);
    let mut end = rounds.len();
    for (i, r) in rounds.iter().enumerate() {
        if r.0 != u && r.0 != v {
            end = i;
            break;
        }
    }
    let mut totals = Vec::new();
    let mut s = 0i128;
    for r in rounds {
        s += r.1 as i128;
        totals.push(s);
    }
    let factor = if reduction { 1_000_000 - eps_ppm } else { eps_ppm };
    for r in 1..end {
        let (prev, cur) = (totals[r - 1], totals[r]);
        if rounds[r].0 == v && prev > 0 && cur * 1_000_000 <= factor * prev {
            return Some((r, end - 1));
        }
    }
    None
}
