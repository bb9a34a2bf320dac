use std::collections::HashMap;

#[derive(Clone, Debug, Default)]
struct BindingState {
    library: String,
    /// Import lines currently in the file that establish this binding.
    live: u32,
    /// Activation intervals `[from, until)` over commit ordinals.
    spans: Vec<(u32, Option<u32>)>,
    /// Tie-break among simultaneously live bindings of one token: the most
    /// recently activated wins, as with rebinding a name in Python.
    activated_seq: u64,
}

/// Alias bindings of one source file.
#[derive(Clone, Debug, Default)]
pub struct FileAliases {
    tokens: HashMap<String, Vec<BindingState>>,
    seq: u64,
}

impl FileAliases {
    /// Library bound to `token` right now.
    pub fn resolve(&self, token: &str) -> Option<&str> {
        self.tokens
            .get(token)?
            .iter()
            .filter(|b| b.live > 0)
            .max_by_key(|b| b.activated_seq)
            .map(|b| b.library.as_str())
    }

    /// Whether `library` has at least one live binding in this file.
    pub fn has_library(&self, library: &str) -> bool {
        self.tokens
            .values()
            .flatten()
            .any(|b| b.live > 0 && b.library == library)
    }

    /// Library bound to `token` as of `ordinal`, from the recorded spans.
    pub fn resolve_at(&self, token: &str, ordinal: u32) -> Option<&str> {
        self.tokens
            .get(token)?
            .iter()
            .filter_map(|b| {
                b.spans
                    .iter()
                    .filter(|&&(from, until)| from <= ordinal && until.is_none_or(|u| u > ordinal))
                    .map(|&(from, _)| (from, b.activated_seq, b.library.as_str()))
                    .max()
            })
            .max()
            .map(|(_, _, lib)| lib)
    }

    /// Applies the net change in import lines binding `token` → `library`
    /// made by the commit at `ordinal`.
    pub(crate) fn apply(&mut self, token: &str, library: &str, delta: i64, ordinal: u32) {
        if delta == 0 {
            return;
        }
        self.seq += 1;
        let seq = self.seq;
        let list = self.tokens.entry(token.to_owned()).or_default();
        let idx = match list.iter().position(|b| b.library == library) {
            Some(i) => i,
            None => {
                list.push(BindingState {
                    library: library.to_owned(),
                    ..Default::default()
                });
                list.len() - 1
            }
        };
        let b = &mut list[idx];
        let was_live = b.live > 0;
        b.live = (b.live as i64 + delta).max(0) as u32;
        match (was_live, b.live > 0) {
            (false, true) => {
                b.spans.push((ordinal, None));
                b.activated_seq = seq;
            }
            (true, false) => {
                if let Some(last) = b.spans.last_mut() {
                    last.1 = Some(ordinal);
                }
            }
            _ => {}
        }
    }
}

/// Per-file alias scopes for one repository, built incrementally from diff
/// lines in ordinal order.
#[derive(Clone, Debug, Default)]
pub struct AliasTable {
    files: HashMap<String, FileAliases>,
    pub(crate) last_ordinal: Option<u32>,
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn file(&self, path: &str) -> Option<&FileAliases> {
        self.files.get(path)
    }

    pub(crate) fn file_mut(&mut self, path: &str) -> &mut FileAliases {
        self.files.entry(path.to_owned()).or_default()
    }
}
