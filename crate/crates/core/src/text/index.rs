use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::stoplist::Stoplist;
use super::tokenize::{sentence_tokens, tokenize_sentences};
use crate::error::{Error, Result};
use crate::relation::FormalContext;

/// One sentence after preprocessing; an object of the formal context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub id: String,
    pub article_id: String,
    pub raw: String,
    pub tokens: Vec<String>,
}

/// Splits `text` into sentences and reduces each to its stemmed,
/// stopword-free tokens. Sentences left with no tokens are dropped. Unit ids
/// are `s0, s1, …` in sentence order and `article_id` is empty; see
/// [`preprocess_article`] for tagged units.
pub fn preprocess(text: &str, stoplist: &Stoplist) -> Vec<SentenceUnit> {
    preprocess_article("", [text], stoplist)
}

/// Preprocesses several texts belonging to one article (title first, then
/// optionally the description). Units are numbered across all texts as
/// `<article_id>#<n>`, or `s<n>` when `article_id` is empty.
pub fn preprocess_article<'a>(
    article_id: &str,
    texts: impl IntoIterator<Item = &'a str>,
    stoplist: &Stoplist,
) -> Vec<SentenceUnit> {
    texts
        .into_iter()
        .flat_map(tokenize_sentences)
        .filter_map(|raw| {
            let tokens = sentence_tokens(&raw, stoplist);
            (!tokens.is_empty()).then_some((raw, tokens))
        })
        .enumerate()
        .map(|(n, (raw, tokens))| SentenceUnit {
            id: if article_id.is_empty() {
                format!("s{n}")
            } else {
                format!("{article_id}#{n}")
            },
            article_id: article_id.to_string(),
            raw,
            tokens,
        })
        .collect()
}

/// Occurrence counts and relative term frequencies, one document per
/// sentence unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TermIndex {
    documents: Vec<String>,
    terms: Vec<String>,
    lookup: HashMap<String, usize>,
    /// Per document: `(term, count)` sorted by term index.
    counts: Vec<Vec<(usize, u32)>>,
    doc_totals: Vec<u64>,
    term_totals: Vec<u64>,
    total_tokens: u64,
}

impl TermIndex {
    pub fn documents(&self) -> &[String] {
        &self.documents
    }

    /// Terms in order of first appearance.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.lookup.get(term).copied()
    }

    /// Occurrences of `term` in `doc`.
    pub fn count(&self, term: usize, doc: usize) -> u32 {
        self.counts[doc]
            .binary_search_by_key(&term, |&(t, _)| t)
            .map_or(0, |i| self.counts[doc][i].1)
    }

    /// `n_ij / Σ_k n_kj`; zero for an empty document.
    pub fn tf(&self, term: usize, doc: usize) -> f64 {
        match self.doc_totals[doc] {
            0 => 0.0,
            total => f64::from(self.count(term, doc)) / total as f64,
        }
    }

    /// Non-zero `(term, count)` entries of one document.
    pub fn document_counts(&self, doc: usize) -> &[(usize, u32)] {
        &self.counts[doc]
    }

    pub fn document_total(&self, doc: usize) -> u64 {
        self.doc_totals[doc]
    }

    /// Corpus-level weight: all occurrences of the term over all tokens.
    pub fn corpus_weight(&self, term: &str) -> Option<f64> {
        let t = self.term_index(term)?;
        Some(self.term_totals[t] as f64 / self.total_tokens as f64)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

pub fn build_index(units: &[SentenceUnit]) -> Result<TermIndex> {
    let mut index = TermIndex {
        documents: Vec::with_capacity(units.len()),
        terms: Vec::new(),
        lookup: HashMap::new(),
        counts: Vec::with_capacity(units.len()),
        doc_totals: Vec::with_capacity(units.len()),
        term_totals: Vec::new(),
        total_tokens: 0,
    };
    for unit in units {
        if unit.tokens.is_empty() {
            return Err(Error::invalid(format!("sentence unit {} has no tokens", unit.id)));
        }
        let mut doc: HashMap<usize, u32> = HashMap::new();
        for token in &unit.tokens {
            let t = *index.lookup.entry(token.clone()).or_insert_with(|| {
                index.terms.push(token.clone());
                index.term_totals.push(0);
                index.terms.len() - 1
            });
            *doc.entry(t).or_default() += 1;
            index.term_totals[t] += 1;
        }
        let mut doc: Vec<(usize, u32)> = doc.into_iter().collect();
        doc.sort_unstable();
        index.documents.push(unit.id.clone());
        index.doc_totals.push(unit.tokens.len() as u64);
        index.total_tokens += unit.tokens.len() as u64;
        index.counts.push(doc);
    }
    Ok(index)
}

/// Sentences × keywords with an incidence wherever the keyword occurs at
/// least once. Attributes follow first appearance.
pub fn build_context(units: &[SentenceUnit]) -> Result<FormalContext> {
    let mut attributes: Vec<String> = Vec::new();
    let mut lookup: HashMap<&str, usize> = HashMap::new();
    let mut incidence = Vec::new();
    for (o, unit) in units.iter().enumerate() {
        for token in &unit.tokens {
            let a = *lookup.entry(token.as_str()).or_insert_with(|| {
                attributes.push(token.clone());
                attributes.len() - 1
            });
            incidence.push((o, a));
        }
    }
    FormalContext::new(units.iter().map(|u| u.id.clone()).collect(), attributes, incidence)
}
