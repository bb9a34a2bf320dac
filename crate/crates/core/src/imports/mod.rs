//! Library mining over Python diff lines: import recognition, per-file alias
//! scopes and direct-use attribution.

mod alias;
mod extract;
mod lexer;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::author::AuthorKey;
use crate::error::{Error, Result};
use crate::history::CommitRecord;

pub use alias::{AliasTable, FileAliases};
pub use extract::{extract_import, top_level, Binding, BindingKind, ImportLine, ImportStatement};

/// Lines referencing one library in one commit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryEvent {
    #[serde(rename = "repo")]
    pub repo_id: String,
    #[serde(rename = "ord")]
    pub ordinal: u32,
    pub author: AuthorKey,
    #[serde(rename = "lib")]
    pub library: String,
    #[serde(rename = "add")]
    pub added_loc: u32,
    #[serde(rename = "del")]
    pub deleted_loc: u32,
    #[serde(rename = "imp_add")]
    pub import_added: bool,
    #[serde(rename = "imp_rm")]
    pub import_removed: bool,
}

impl LibraryEvent {
    /// Net change `added − deleted`.
    pub fn net(&self) -> i64 {
        self.added_loc as i64 - self.deleted_loc as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineOptions {
    /// Mine the (first-parent) diffs of merge commits too.
    pub include_merge_diffs: bool,
    /// Count import lines themselves as lines referencing the library.
    pub count_import_lines: bool,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions {
            include_merge_diffs: false,
            count_import_lines: true,
        }
    }
}

/// Libraries directly referenced by a non-import source line.
pub fn classify_line(line: &str, aliases: &FileAliases) -> BTreeSet<String> {
    lexer::call_like_identifiers(line)
        .into_iter()
        .filter_map(|ident| match aliases.resolve(ident) {
            Some(lib) => Some(lib),
            None if aliases.has_library(ident) => Some(ident),
            None => None,
        })
        .map(str::to_owned)
        .collect()
}

#[derive(Default)]
struct Tally {
    added: u32,
    deleted: u32,
    import_added: bool,
    import_removed: bool,
}

/// Mines one commit and then folds its import changes into `tables`.
///
/// Deleted lines are classified against the bindings in force before the
/// commit, added lines against the bindings after it, so a commit that adds
/// `import numpy as np` and `np.zeros(3)` together credits both lines.
pub fn mine_commit(
    commit: &CommitRecord,
    tables: &mut AliasTable,
    options: &MineOptions,
) -> Result<Vec<LibraryEvent>> {
    let ordinal = commit.ordinal.ok_or_else(|| Error::Unlinearized {
        hash: commit.hash.clone(),
    })?;
    if let Some(last) = tables.last_ordinal {
        if ordinal <= last {
            return Err(Error::Sequencing {
                repo: commit.repo_id.clone(),
                last,
                got: ordinal,
            });
        }
    }
    tables.last_ordinal = Some(ordinal);

    let mut tally: BTreeMap<String, Tally> = BTreeMap::new();
    if commit.is_merge && !options.include_merge_diffs {
        return Ok(Vec::new());
    }

    for diff in commit.diffs.iter().filter(|d| d.is_python()) {
        let file = tables.file_mut(&diff.path);
        let mut binding_delta: HashMap<(String, String), i64> = HashMap::new();

        for line in &diff.deleted_lines {
            if let Some(import) = extract_import(line) {
                for lib in import.libraries() {
                    let t = tally.entry(lib.to_owned()).or_default();
                    t.import_removed = true;
                    if options.count_import_lines {
                        t.deleted += 1;
                    }
                }
                for (token, lib) in usable_bindings(&import) {
                    *binding_delta.entry((token, lib)).or_default() -= 1;
                }
            } else {
                for lib in classify_line(line, file) {
                    tally.entry(lib).or_default().deleted += 1;
                }
            }
        }

        let mut imports_added = Vec::new();
        for line in &diff.added_lines {
            if let Some(import) = extract_import(line) {
                for lib in import.libraries() {
                    let t = tally.entry(lib.to_owned()).or_default();
                    t.import_added = true;
                    if options.count_import_lines {
                        t.added += 1;
                    }
                }
                for (token, lib) in usable_bindings(&import) {
                    *binding_delta.entry((token, lib)).or_default() += 1;
                }
            } else {
                imports_added.push(line);
            }
        }

        let mut deltas: Vec<_> = binding_delta.into_iter().collect();
        deltas.sort();
        for ((token, lib), delta) in deltas {
            file.apply(&token, &lib, delta, ordinal);
        }

        for line in imports_added {
            for lib in classify_line(line, file) {
                tally.entry(lib).or_default().added += 1;
            }
        }
    }

    Ok(tally
        .into_iter()
        .filter(|(_, t)| t.added + t.deleted > 0)
        .map(|(library, t)| LibraryEvent {
            repo_id: commit.repo_id.clone(),
            ordinal,
            author: commit.author.key.clone(),
            library,
            added_loc: t.added,
            deleted_loc: t.deleted,
            import_added: t.import_added,
            import_removed: t.import_removed,
        })
        .collect())
}

fn usable_bindings(import: &ImportLine) -> impl Iterator<Item = (String, String)> + '_ {
    import.statements.iter().flat_map(|s| {
        s.bound_names
            .iter()
            .filter(|b| b.is_usable())
            .map(move |b| (b.token.clone(), s.top_level.clone()))
    })
}

/// Mines a linearized repository in ordinal order.
pub fn mine_repository(commits: &[CommitRecord], options: &MineOptions) -> Result<Vec<LibraryEvent>> {
    let mut tables = AliasTable::new();
    let mut out = Vec::new();
    for c in commits {
        out.extend(mine_commit(c, &mut tables, options)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::author::AuthorId;
    use crate::history::FileDiff;

    fn commit(ordinal: u32, diffs: Vec<FileDiff>) -> CommitRecord {
        let mut c = CommitRecord::new("r", format!("{ordinal:040x}"), vec![], AuthorId::new("u", "u@x"), 0);
        c.ordinal = Some(ordinal);
        c.diffs = diffs;
        c
    }

    fn diff(path: &str, added: &[&str], deleted: &[&str]) -> FileDiff {
        FileDiff {
            path: path.into(),
            added_lines: added.iter().map(|s| s.to_string()).collect(),
            deleted_lines: deleted.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn libs(line: &str, aliases: &FileAliases) -> Vec<String> {
        classify_line(line, aliases).into_iter().collect()
    }

    fn counts(events: &[LibraryEvent]) -> Vec<(&str, u32, u32, bool, bool)> {
        events
            .iter()
            .map(|e| (e.library.as_str(), e.added_loc, e.deleted_loc, e.import_added, e.import_removed))
            .collect()
    }

    #[test]
    fn classify_direct_uses() {
        let mut f = FileAliases::default();
        f.apply("np", "numpy", 1, 0);
        assert_eq!(libs("bins = np.linspace(df.a.min(), df.a.max(), 10)", &f), ["numpy"]);
        assert_eq!(libs("groups = df.groupby(np.digitize(df.a, bins))", &f), ["numpy"]);
        assert!(libs("print('np.linspace(')", &f).is_empty());
        assert_eq!(libs("numpy.zeros(2)", &f), ["numpy"]);
        assert!(libs("pandas.read_csv(x)", &f).is_empty());
        assert!(libs("x.np.zeros()", &f).is_empty());
    }

    #[test]
    fn commit_without_python_files() {
        let c = commit(0, vec![diff("README.md", &["import numpy"], &[])]);
        assert!(mine_commit(&c, &mut AliasTable::new(), &MineOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn out_of_order_commit_is_rejected() {
        let mut t = AliasTable::new();
        let o = MineOptions::default();
        mine_commit(&commit(3, vec![]), &mut t, &o).unwrap();
        assert!(matches!(mine_commit(&commit(3, vec![]), &mut t, &o), Err(Error::Sequencing { .. })));
    }

    #[test]
    fn deletions_see_pre_commit_bindings() {
        let mut t = AliasTable::new();
        let o = MineOptions::default();
        mine_commit(&commit(0, vec![diff("a.py", &["import pandas as pd", "x = pd.DataFrame()"], &[])]), &mut t, &o)
            .unwrap();
        // removing the import and its last use together credits both deletions
        let ev = mine_commit(
            &commit(1, vec![diff("a.py", &["y = pd.Series()"], &["import pandas as pd", "x = pd.DataFrame()"])]),
            &mut t,
            &o,
        )
        .unwrap();
        assert_eq!(counts(&ev), [("pandas", 0, 2, false, true)]);
    }

    #[test]
    fn aliases_are_per_file() {
        let mut t = AliasTable::new();
        let o = MineOptions::default();
        let ev = mine_commit(
            &commit(0, vec![diff("a.py", &["import numpy as np"], &[]), diff("b.py", &["np.zeros(1)"], &[])]),
            &mut t,
            &o,
        )
        .unwrap();
        assert_eq!(counts(&ev), [("numpy", 1, 0, true, false)]);
    }

    #[test]
    fn rebinding_and_star_imports() {
        let mut t = AliasTable::new();
        let o = MineOptions::default();
        mine_commit(&commit(0, vec![diff("a.py", &["import numpy as m", "from pylab import *"], &[])]), &mut t, &o)
            .unwrap();
        let ev = mine_commit(
            &commit(1, vec![diff("a.py", &["import math as m", "m.sqrt(2)", "plot(x)"], &["import numpy as m"])]),
            &mut t,
            &o,
        )
        .unwrap();
        assert_eq!(counts(&ev), [("math", 2, 0, true, false), ("numpy", 0, 1, false, true)]);
    }

    #[test]
    fn import_lines_can_be_excluded() {
        let o = MineOptions {
            count_import_lines: false,
            ..Default::default()
        };
        let ev = mine_commit(
            &commit(0, vec![diff("a.py", &["import numpy as np", "np.ones(1)", "import os"], &[])]),
            &mut AliasTable::new(),
            &o,
        )
        .unwrap();
        assert_eq!(counts(&ev), [("numpy", 1, 0, true, false)]);
    }

    #[test]
    fn merge_diffs_skipped_by_default() {
        let mut c = commit(0, vec![diff("a.py", &["import os"], &[])]);
        c.parent_hashes = vec!["1".repeat(40), "2".repeat(40)];
        c.is_merge = true;
        assert!(mine_commit(&c, &mut AliasTable::new(), &MineOptions::default()).unwrap().is_empty());
        let o = MineOptions {
            include_merge_diffs: true,
            ..Default::default()
        };
        assert_eq!(mine_commit(&c, &mut AliasTable::new(), &o).unwrap().len(), 1);
    }

    #[test]
    fn multi_library_line_counts_once_per_library() {
        let ev = mine_commit(
            &commit(0, vec![diff("a.py", &["import numpy as np, pandas as pd", "x = np.dot(pd.Series(np.ones(2)))"], &[])]),
            &mut AliasTable::new(),
            &MineOptions::default(),
        )
        .unwrap();
        assert_eq!(counts(&ev), [("numpy", 2, 0, true, false), ("pandas", 2, 0, true, false)]);
    }
}
