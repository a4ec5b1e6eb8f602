//! Source adapters: fetch JSON payloads, map them onto the unified article
//! record, and merge batches from several sources.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use url::Url;

use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const MAX_RETRIES: u32 = 2;
const RETRY_BACKOFF: Duration = Duration::from_millis(200);
const API_KEY_HEADER: &str = "X-Api-Key";

/// A news item in the unified schema. `id` is derived from `(source, url)`
/// and is not stored in corpus files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ArticleRecord", into = "ArticleRecord")]
pub struct Article {
    pub id: String,
    pub source: String,
    pub title: String,
    pub description: String,
    pub url: String,
    pub fetched_at: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
struct ArticleRecord {
    source: String,
    title: String,
    #[serde(default)]
    description: String,
    url: String,
    fetched_at: DateTime<Utc>,
}

impl Article {
    pub fn new(
        source: &str,
        title: &str,
        description: &str,
        url: &str,
        fetched_at: DateTime<Utc>,
    ) -> Result<Self> {
        let title = title.trim();
        if title.is_empty() {
            return Err(Error::invalid("empty title"));
        }
        let url = url.trim();
        check_absolute_url(url)?;
        Ok(Article {
            id: article_id(source, url),
            source: source.to_string(),
            title: title.to_string(),
            description: description.trim().to_string(),
            url: url.to_string(),
            fetched_at,
        })
    }
}

impl TryFrom<ArticleRecord> for Article {
    type Error = Error;

    fn try_from(r: ArticleRecord) -> Result<Self> {
        Article::new(&r.source, &r.title, &r.description, &r.url, r.fetched_at)
    }
}

impl From<Article> for ArticleRecord {
    fn from(a: Article) -> Self {
        ArticleRecord {
            source: a.source,
            title: a.title,
            description: a.description,
            url: a.url,
            fetched_at: a.fetched_at,
        }
    }
}

fn check_absolute_url(url: &str) -> Result<()> {
    match Url::parse(url) {
        Ok(u) if !u.cannot_be_a_base() => Ok(()),
        Ok(_) => Err(Error::invalid(format!("not a hierarchical URL: {url}"))),
        Err(e) => Err(Error::invalid(format!("invalid URL {url:?}: {e}"))),
    }
}

/// First 16 hex digits of SHA-256 over `source \n url`.
pub fn article_id(source: &str, url: &str) -> String {
    let mut h = Sha256::new();
    h.update(source.as_bytes());
    h.update(b"\n");
    h.update(url.as_bytes());
    hex::encode(h.finalize())[..16].to_string()
}

pub fn read_corpus(path: &Path) -> Result<Vec<Article>> {
    let bytes = std::fs::read(path).map_err(|e| Error::storage(path, e))?;
    parse_corpus(&bytes)
}

pub fn parse_corpus(bytes: &[u8]) -> Result<Vec<Article>> {
    serde_json::from_slice(bytes).map_err(|e| Error::from_json(bytes, e))
}

pub fn corpus_to_json(articles: &[Article]) -> String {
    let mut s = serde_json::to_string_pretty(articles).expect("articles serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMode {
    Live,
    Fixture,
}

/// Dotted paths into one source's payload. `items` locates the article
/// array (empty for a top-level array); the others are relative to an item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMap {
    #[serde(default)]
    pub items: String,
    pub title: String,
    pub description: String,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub name: String,
    /// URL in live mode, file path in fixture mode.
    pub endpoint: String,
    pub field_map: FieldMap,
    /// Environment variable holding the API key; defaults to
    /// `CB_SOURCE_<NAME>_KEY`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_ref: Option<String>,
    pub mode: SourceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<u64>,
}

impl SourceConfig {
    pub fn credential_var(&self) -> String {
        self.credential_ref.clone().unwrap_or_else(|| {
            let name: String = self
                .name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
                .collect();
            format!("CB_SOURCE_{name}_KEY")
        })
    }

    pub fn timeout(&self) -> Duration {
        self.timeout_secs.map_or(DEFAULT_TIMEOUT, Duration::from_secs)
    }
}

/// Reads a JSON array of source configs. Relative fixture paths are
/// resolved against the config file's directory.
pub fn load_sources(path: &Path) -> Result<Vec<SourceConfig>> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Config(format!("cannot read source config {}: {e}", path.display())))?;
    let mut sources: Vec<SourceConfig> =
        serde_json::from_slice(&bytes).map_err(|e| Error::from_json(&bytes, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for s in &mut sources {
        if s.mode == SourceMode::Fixture && Path::new(&s.endpoint).is_relative() {
            s.endpoint = base.join(&s.endpoint).to_string_lossy().into_owned();
        }
    }
    Ok(sources)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub bytes: Vec<u8>,
    /// File modification time for fixtures (so re-reading an unchanged file
    /// is reproducible), wall clock for live requests.
    pub fetched_at: DateTime<Utc>,
}

pub fn fetch_source(config: &SourceConfig) -> Result<Payload> {
    match config.mode {
        SourceMode::Fixture => fetch_fixture(config),
        SourceMode::Live => fetch_live(config),
    }
}

fn fetch_fixture(config: &SourceConfig) -> Result<Payload> {
    let path = PathBuf::from(&config.endpoint);
    let unreadable =
        |e: std::io::Error| Error::Config(format!("source {}: cannot read fixture {}: {e}", config.name, path.display()));
    let bytes = std::fs::read(&path).map_err(unreadable)?;
    let modified = std::fs::metadata(&path).and_then(|m| m.modified()).map_err(unreadable)?;
    Ok(Payload {
        bytes,
        fetched_at: DateTime::<Utc>::from(modified).trunc_subsecs(0),
    })
}

fn fetch_live(config: &SourceConfig) -> Result<Payload> {
    let var = config.credential_var();
    let key = std::env::var(&var)
        .map_err(|_| Error::Config(format!("source {}: environment variable {var} is not set", config.name)))?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout()))
        .http_status_as_error(false)
        .build()
        .into();
    let mut last_error = String::new();
    for attempt in 0..=MAX_RETRIES {
        if attempt > 0 {
            std::thread::sleep(RETRY_BACKOFF * 2u32.pow(attempt - 1));
        }
        match agent.get(&config.endpoint).header(API_KEY_HEADER, &key).call() {
            Ok(mut response) => {
                let status = response.status().as_u16();
                if !(200..300).contains(&status) {
                    return Err(Error::SourceStatus {
                        source_name: config.name.clone(),
                        status,
                    });
                }
                match response.body_mut().read_to_vec() {
                    Ok(bytes) => {
                        return Ok(Payload {
                            bytes,
                            fetched_at: Utc::now().trunc_subsecs(0),
                        })
                    }
                    Err(e) => last_error = e.to_string(),
                }
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(Error::Fetch {
        source_name: config.name.clone(),
        detail: format!("{last_error} (after {} attempts)", MAX_RETRIES + 1),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedEntry {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub articles: Vec<Article>,
    pub dropped: Vec<DroppedEntry>,
}

fn lookup<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    if path.is_empty() {
        return Some(value);
    }
    path.split('.').try_fold(value, |v, seg| match v {
        Value::Object(map) => map.get(seg),
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

fn text_at(item: &Value, path: &str, field: &str) -> std::result::Result<String, String> {
    match lookup(item, path) {
        None => Err(format!("missing {field} at {path:?}")),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) if field == "description" => Ok(String::new()),
        Some(other) => Err(format!("{field} at {path:?} is not a string: {other}")),
    }
}

/// Maps each payload item through the field map. Bad entries are dropped and
/// recorded; only malformed JSON or a missing item array is an error.
pub fn normalize(raw: &[u8], config: &SourceConfig, fetched_at: DateTime<Utc>) -> Result<Normalized> {
    let payload: Value = serde_json::from_slice(raw).map_err(|e| Error::from_json(raw, e))?;
    let map = &config.field_map;
    let items = lookup(&payload, &map.items)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse {
            offset: 0,
            detail: format!("source {}: no array at {:?}", config.name, map.items),
        })?;
    let mut out = Normalized {
        articles: Vec::with_capacity(items.len()),
        dropped: Vec::new(),
    };
    for (index, item) in items.iter().enumerate() {
        let entry = (|| {
            let title = text_at(item, &map.title, "title")?;
            let description = text_at(item, &map.description, "description")?;
            let url = text_at(item, &map.url, "url")?;
            Article::new(&config.name, &title, &description, &url, fetched_at).map_err(|e| e.to_string())
        })();
        match entry {
            Ok(article) => out.articles.push(article),
            Err(reason) => out.dropped.push(DroppedEntry { index, reason }),
        }
    }
    Ok(out)
}

/// Concatenates batches in order, keeping the first article for each URL.
pub fn merge_sources(batches: Vec<Vec<Article>>) -> Vec<Article> {
    let mut seen = HashSet::new();
    batches
        .into_iter()
        .flatten()
        .filter(|a| seen.insert(a.url.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceReport {
    pub name: String,
    pub articles: usize,
    pub dropped: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub articles: Vec<Article>,
    pub reports: Vec<SourceReport>,
}

impl Ingested {
    pub fn failed_sources(&self) -> usize {
        self.reports.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Fetches every source concurrently, then normalizes and merges in
/// configured order. Fails only when every source fails.
pub fn ingest(sources: &[SourceConfig]) -> Result<Ingested> {
    let fetched: Vec<Result<Payload>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sources
            .iter()
            .map(|s| scope.spawn(move || fetch_source(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fetch thread panicked"))
            .collect()
    });
    let mut batches = Vec::with_capacity(sources.len());
    let mut reports = Vec::with_capacity(sources.len());
    for (source, payload) in sources.iter().zip(fetched) {
        let result = payload.and_then(|p| normalize(&p.bytes, source, p.fetched_at));
        match result {
            Ok(n) => {
                reports.push(SourceReport {
                    name: source.name.clone(),
                    articles: n.articles.len(),
                    dropped: n.dropped.len(),
                    error: None,
                });
                batches.push(n.articles);
            }
            Err(e) => reports.push(SourceReport {
                name: source.name.clone(),
                articles: 0,
                dropped: 0,
                error: Some(e.to_string()),
            }),
        }
    }
    if !sources.is_empty() && batches.is_empty() {
        let reasons: Vec<String> = reports
            .iter()
            .map(|r| format!("{}: {}", r.name, r.error.as_deref().unwrap_or("?")))
            .collect();
        return Err(Error::Config(format!("all sources failed: {}", reasons.join("; "))));
    }
    Ok(Ingested {
        articles: merge_sources(batches),
        reports,
    })
}
