use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};

use super::CommitRecord;

/// Orders commits so that every commit comes after all of its in-corpus
/// parents, assigning dense ordinals from 0.
///
/// Kahn's algorithm over the parent graph; when several commits are ready at
/// once the earliest author timestamp goes first, then the smaller hash.
/// Parents that are not in `commits` are treated as external roots. The
/// result depends only on the set of commits, not on their input order.
pub fn linearize(commits: Vec<CommitRecord>) -> Result<Vec<CommitRecord>> {
    let index: HashMap<&str, usize> = commits
        .iter()
        .enumerate()
        .map(|(i, c)| (c.hash.as_str(), i))
        .collect();

    let mut pending = vec![0usize; commits.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); commits.len()];
    for (i, c) in commits.iter().enumerate() {
        let mut parents: Vec<usize> = c
            .parent_hashes
            .iter()
            .filter_map(|p| index.get(p.as_str()).copied())
            .collect();
        parents.sort_unstable();
        parents.dedup();
        pending[i] = parents.len();
        for p in parents {
            children[p].push(i);
        }
    }

    let key = |i: usize| Reverse((commits[i].author_ts, commits[i].hash.as_str(), i));
    let mut ready: BinaryHeap<_> = (0..commits.len())
        .filter(|&i| pending[i] == 0)
        .map(key)
        .collect();
    let mut order = Vec::with_capacity(commits.len());
    while let Some(Reverse((_, _, i))) = ready.pop() {
        order.push(i);
        for &child in &children[i] {
            pending[child] -= 1;
            if pending[child] == 0 {
                ready.push(key(child));
            }
        }
    }

    if order.len() < commits.len() {
        return Err(Error::Cycle {
            hash: commits[find_cycle_member(&commits, &index, &pending)].hash.clone(),
        });
    }

    let mut slots: Vec<Option<CommitRecord>> = commits.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(ordinal, i)| {
            let mut c = slots[i].take().expect("each commit placed once");
            c.ordinal = Some(ordinal as u32);
            c
        })
        .collect())
}

/// Every unplaced commit still waits on an unplaced parent, so walking parent
/// links from any of them must eventually revisit a node; that node is on a
/// cycle.
fn find_cycle_member(
    commits: &[CommitRecord],
    index: &HashMap<&str, usize>,
    pending: &[usize],
) -> usize {
    let start = pending.iter().position(|&p| p > 0).expect("some commit unplaced");
    let mut seen = vec![false; commits.len()];
    let mut at = start;
    loop {
        if seen[at] {
            return at;
        }
        seen[at] = true;
        at = commits[at]
            .parent_hashes
            .iter()
            .filter_map(|p| index.get(p.as_str()).copied())
            .find(|&p| pending[p] > 0)
            .expect("unplaced commit has an unplaced parent");
    }
}
