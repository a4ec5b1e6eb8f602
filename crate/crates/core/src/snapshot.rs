//! Immutable analysis snapshots (corpus → context → tree) and their on-disk
//! store: `snapshot-<id>.json` files plus a `latest` pointer holding the id
//! of the snapshot to serve.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Article;
use crate::text::{build_context, build_index, preprocess_article, SentenceUnit, Stoplist};
use crate::tree::{build_tree, extract_optimal_concepts, label_concept, merge_duplicate_labels, ConceptTree, DEFAULT_ARITY};

pub const LATEST: &str = "latest";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildOptions {
    pub arity: usize,
    pub include_descriptions: bool,
    /// `None` selects the bundled English list.
    pub stoplist_path: Option<PathBuf>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            arity: DEFAULT_ARITY,
            include_descriptions: false,
            stoplist_path: None,
        }
    }
}

impl BuildOptions {
    pub fn stoplist(&self) -> Result<Stoplist> {
        match &self.stoplist_path {
            Some(p) => Stoplist::load(p),
            None => Ok(Stoplist::bundled()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub article_count: usize,
    /// Articles that contributed no sentence after preprocessing.
    pub dropped_count: usize,
    pub concept_count: usize,
    pub build_duration_ms: u64,
}

/// Sentence units for a corpus: titles, plus descriptions when asked.
pub fn corpus_units(corpus: &[Article], include_descriptions: bool, stoplist: &Stoplist) -> Vec<SentenceUnit> {
    let per_article = |a: &Article| {
        let texts: &[&str] = if include_descriptions {
            &[a.title.as_str(), a.description.as_str()]
        } else {
            &[a.title.as_str()]
        };
        preprocess_article(&a.id, texts.iter().copied(), stoplist)
    };
    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<SentenceUnit>> = {
        use rayon::prelude::*;
        corpus.par_iter().map(per_article).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<SentenceUnit>> = corpus.iter().map(per_article).collect();
    nested.into_iter().flatten().collect()
}

/// Runs the whole text-to-tree pipeline. Returns the tree and the number of
/// extracted (pre-merge) concepts.
pub fn analyze(corpus: &[Article], options: &BuildOptions) -> Result<(ConceptTree, Stats)> {
    let started = Instant::now();
    let stoplist = options.stoplist()?;
    if options.arity < 2 {
        return Err(Error::invalid(format!("arity must be at least 2, got {}", options.arity)));
    }
    let units = corpus_units(corpus, options.include_descriptions, &stoplist);
    let index = build_index(&units)?;
    let context = build_context(&units)?;
    let concepts = extract_optimal_concepts(&context)?;
    let labeled = concepts
        .iter()
        .map(|c| label_concept(c, &context, &index, &units))
        .collect::<Result<Vec<_>>>()?;
    let tree = build_tree(merge_duplicate_labels(labeled), options.arity)?;
    let contributing: HashSet<&str> = units.iter().map(|u| u.article_id.as_str()).collect();
    let stats = Stats {
        article_count: corpus.len(),
        dropped_count: corpus.iter().filter(|a| !contributing.contains(a.id.as_str())).count(),
        concept_count: concepts.len(),
        build_duration_ms: started.elapsed().as_millis() as u64,
    };
    Ok((tree, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub stats: Stats,
    pub tree: ConceptTree,
    pub corpus: Vec<Article>,
}

impl Snapshot {
    pub fn article(&self, id: &str) -> Option<&Article> {
        self.corpus.iter().find(|a| a.id == id)
    }

    /// Every article id in the tree must resolve in the corpus.
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        let known: HashSet<&str> = self.corpus.iter().map(|a| a.id.as_str()).collect();
        if let Some(missing) = self.tree.article_ids().into_iter().find(|id| !known.contains(id)) {
            return Err(Error::Internal(format!("tree references unknown article {missing}")));
        }
        Ok(())
    }
}

pub fn snapshot_id(at: DateTime<Utc>) -> String {
    at.format("%Y%m%dT%H%M%S%6fZ").to_string()
}

pub fn snapshot_build(corpus: Vec<Article>, options: &BuildOptions) -> Result<Snapshot> {
    let created_at = Utc::now();
    let (tree, stats) = analyze(&corpus, options)?;
    let snapshot = Snapshot {
        id: snapshot_id(created_at),
        created_at,
        stats,
        tree,
        corpus,
    };
    snapshot.validate()?;
    Ok(snapshot)
}

pub fn snapshot_file(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("snapshot-{id}.json"))
}

/// Where a persist is made to fail, for crash-safety tests.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Half of the snapshot body is written, then the write fails.
    TruncatedSnapshot,
    /// The snapshot file is in place but the pointer is never swapped.
    BeforePointerSwap,
    /// Half of the new pointer is written, then the write fails.
    TruncatedPointer,
}

/// Writes the snapshot file and then swaps the `latest` pointer, each via
/// write-temp, fsync, rename.
pub fn persist_snapshot(snapshot: &Snapshot, dir: &Path) -> Result<PathBuf> {
    persist_with_fault(snapshot, dir, Fault::None)
}

#[doc(hidden)]
pub fn persist_with_fault(snapshot: &Snapshot, dir: &Path, fault: Fault) -> Result<PathBuf> {
    let body = serde_json::to_vec(snapshot).expect("snapshot serializes");
    let target = snapshot_file(dir, &snapshot.id);
    atomic_write(dir, &target, &body, fault == Fault::TruncatedSnapshot)?;
    if fault == Fault::BeforePointerSwap {
        return Err(injected(dir));
    }
    atomic_write(dir, &dir.join(LATEST), snapshot.id.as_bytes(), fault == Fault::TruncatedPointer)?;
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(target)
}

fn injected(dir: &Path) -> Error {
    Error::storage(dir, std::io::Error::other("injected fault"))
}

fn atomic_write(dir: &Path, target: &Path, bytes: &[u8], truncate: bool) -> Result<()> {
    let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut file = File::create(&tmp).map_err(|e| Error::storage(&tmp, e))?;
    if truncate {
        file.write_all(&bytes[..bytes.len() / 2]).map_err(|e| Error::storage(&tmp, e))?;
        return Err(injected(dir));
    }
    file.write_all(bytes).map_err(|e| Error::storage(&tmp, e))?;
    file.sync_all().map_err(|e| Error::storage(&tmp, e))?;
    fs::rename(&tmp, target).map_err(|e| Error::storage(target, e))
}

/// Id named by the `latest` pointer, if any.
pub fn latest_id(dir: &Path) -> Result<Option<String>> {
    let path = dir.join(LATEST);
    match fs::read_to_string(&path) {
        Ok(id) => Ok(Some(id.trim().to_string())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::storage(path, e)),
    }
}

pub fn load_snapshot(dir: &Path, id: &str) -> Result<Snapshot> {
    let path = snapshot_file(dir, id);
    let bytes = fs::read(&path).map_err(|e| Error::storage(&path, e))?;
    let snapshot: Snapshot = serde_json::from_slice(&bytes).map_err(|e| Error::from_json(&bytes, e))?;
    snapshot.validate()?;
    Ok(snapshot)
}

pub fn load_latest(dir: &Path) -> Result<Option<Snapshot>> {
    latest_id(dir)?.map(|id| load_snapshot(dir, &id)).transpose()
}
