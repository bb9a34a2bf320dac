use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingKind {
    /// `import L` / `import L as A`: the token names the module itself.
    ModuleAlias,
    /// `from L import f [as A]`: the token names something inside `L`.
    ImportedSymbol,
    /// `from L import *`: nothing usable is bound.
    Wildcard,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binding {
    pub token: String,
    pub kind: BindingKind,
}

impl Binding {
    /// Tokens that later source lines can reference.
    pub fn is_usable(&self) -> bool {
        self.kind != BindingKind::Wildcard
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImportStatement {
    pub raw_module_path: String,
    pub top_level: String,
    pub bound_names: Vec<Binding>,
}

impl ImportStatement {
    fn new(raw_module_path: &str, bound_names: Vec<Binding>) -> Self {
        ImportStatement {
            raw_module_path: raw_module_path.to_owned(),
            top_level: top_level(raw_module_path).to_owned(),
            bound_names,
        }
    }
}

/// All module references made by one physical import line. `import a, b`
/// yields two statements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImportLine {
    pub statements: Vec<ImportStatement>,
}

impl ImportLine {
    /// Distinct top-level libraries, in first-mention order.
    pub fn libraries(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.statements {
            if !out.contains(&s.top_level.as_str()) {
                out.push(&s.top_level);
            }
        }
        out
    }
}

/// First dotted segment: `numpy.random` → `numpy`.
pub fn top_level(module_path: &str) -> &str {
    module_path.split('.').next().unwrap_or(module_path)
}

static IMPORT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*import\s+(?P<rest>.+)$").unwrap());
static FROM_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*from\s+(?P<module>[\w.]+)\s+import(?:\s+|\s*\(|\s*\*)(?P<rest>.*)$").unwrap()
});
static DOTTED_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<path>[^\W\d]\w*(?:\s*\.\s*[^\W\d]\w*)*)(?:\s+as\s+(?P<alias>[^\W\d]\w*))?$")
        .unwrap()
});
static NAME_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<name>[^\W\d]\w*)(?:\s+as\s+(?P<alias>[^\W\d]\w*))?$").unwrap()
});

/// Recognizes a Python import statement on a single source line.
///
/// Relative imports (`from . import x`, `from .m import y`) and anything that
/// is not an import return `None`.
pub fn extract_import(line: &str) -> Option<ImportLine> {
    let code = strip_comment(line);
    let code = code.split(';').next().unwrap_or("").trim_end();

    if let Some(caps) = FROM_RE.captures(code) {
        let module = &caps["module"];
        if module.starts_with('.') || module.split('.').any(str::is_empty) {
            return None;
        }
        // the regex swallows a `*` or `(` right after `import`
        let after_import = code[code.find(" import").map(|i| i + 7)?..].trim_start();
        let names = after_import
            .trim_start_matches('(')
            .trim_end_matches('\\')
            .trim_end()
            .trim_end_matches(')');
        let bound = if after_import.starts_with('*') {
            vec![Binding {
                token: "*".into(),
                kind: BindingKind::Wildcard,
            }]
        } else {
            let mut bound = Vec::new();
            for item in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let c = NAME_RE.captures(item)?;
                let token = c.name("alias").unwrap_or_else(|| c.name("name").unwrap());
                bound.push(Binding {
                    token: token.as_str().to_owned(),
                    kind: BindingKind::ImportedSymbol,
                });
            }
            // a bare `from L import (` still imports L
            if bound.is_empty() && !after_import.starts_with('(') {
                return None;
            }
            bound
        };
        return Some(ImportLine {
            statements: vec![ImportStatement::new(module, bound)],
        });
    }

    let caps = IMPORT_RE.captures(code)?;
    let mut statements = Vec::new();
    for item in caps["rest"].trim_end_matches('\\').split(',').map(str::trim) {
        let c = DOTTED_RE.captures(item)?;
        let path: String = c["path"].chars().filter(|ch| !ch.is_whitespace()).collect();
        let token = match c.name("alias") {
            Some(a) => a.as_str().to_owned(),
            None => top_level(&path).to_owned(),
        };
        statements.push(ImportStatement::new(
            &path,
            vec![Binding {
                token,
                kind: BindingKind::ModuleAlias,
            }],
        ));
    }
    if statements.is_empty() {
        return None;
    }
    Some(ImportLine { statements })
}

/// Drops a trailing `# ...` comment. Import lines carry no string literals,
/// so a plain search is enough here.
fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}
