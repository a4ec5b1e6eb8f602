use std::collections::HashSet;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../data/stoplist-en.txt");

/// Lowercase stopwords plus the SHA-256 of the list they were read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stoplist {
    words: HashSet<String>,
    checksum: String,
}

impl Stoplist {
    /// The English list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled stoplist is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read stoplist {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let words: HashSet<String> = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        if words.is_empty() {
            return Err(Error::Config("stoplist contains no words".into()));
        }
        Ok(Stoplist {
            words,
            checksum: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    /// For tests and callers that want stopword removal to be a no-op on
    /// some vocabulary. Still non-empty.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: String = words
            .into_iter()
            .map(|w| format!("{}\n", w.as_ref()))
            .collect();
        Self::parse(&text)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

impl Default for Stoplist {
    fn default() -> Self {
        Self::bundled()
    }
}
