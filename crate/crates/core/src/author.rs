use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Canonical identity of a committer: lowercased email, or lowercased name
/// when the email is empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AuthorKey(String);

impl AuthorKey {
    pub fn new(key: impl Into<String>) -> Self {
        AuthorKey(key.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AuthorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AuthorKey {
    fn from(s: &str) -> Self {
        AuthorKey(s.to_owned())
    }
}

/// A committer as it appears in the log. Equality and hashing go through the
/// canonical key only, so display-name drift does not split one person in two.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuthorId {
    pub name: String,
    pub email: String,
    pub key: AuthorKey,
}

impl AuthorId {
    pub fn new(name: impl Into<String>, email: impl Into<String>) -> Self {
        let name = name.into();
        let email = email.into();
        let key = canonical_key(&name, &email);
        AuthorId { name, email, key }
    }
}

fn canonical_key(name: &str, email: &str) -> AuthorKey {
    let email = email.trim();
    let key = if !email.is_empty() {
        email.to_lowercase()
    } else if !name.trim().is_empty() {
        name.trim().to_lowercase()
    } else {
        "<unknown>".to_owned()
    };
    AuthorKey(key)
}

impl PartialEq for AuthorId {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for AuthorId {}

impl Hash for AuthorId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}
