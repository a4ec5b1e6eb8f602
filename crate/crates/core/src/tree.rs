//! Labels optimal concepts with their heaviest keyword and lays the labels
//! out as a complete heap, heaviest at the root.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{coverage_elements, Concept, FormalContext};
use crate::text::{SentenceUnit, TermIndex};

pub const DEFAULT_ARITY: usize = 3;

/// Optimal concepts covering every incidence pair of the context.
pub fn extract_optimal_concepts(context: &FormalContext) -> Result<Vec<Concept>> {
    Ok(coverage_elements(context)?.into_rectangles())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledConcept {
    /// One concept per label before merging; possibly several after.
    pub concepts: Vec<Concept>,
    pub label: String,
    pub weight: f64,
    /// Intent keywords, unioned across merged concepts.
    pub keywords: BTreeSet<String>,
    pub article_ids: BTreeSet<String>,
}

/// Picks the intent keyword with the highest corpus weight (ties go to the
/// lexicographically smallest keyword) and collects the articles owning the
/// extent's sentences.
pub fn label_concept(
    concept: &Concept,
    context: &FormalContext,
    index: &TermIndex,
    units: &[SentenceUnit],
) -> Result<LabeledConcept> {
    let mut keywords = BTreeSet::new();
    let mut best: Option<(&str, f64)> = None;
    for &a in concept.intent() {
        let keyword = context
            .attributes()
            .get(a)
            .ok_or_else(|| Error::Internal(format!("attribute {a} not in context")))?;
        let weight = index
            .corpus_weight(keyword)
            .ok_or_else(|| Error::Internal(format!("keyword {keyword:?} missing from index")))?;
        keywords.insert(keyword.clone());
        best = match best {
            Some((label, w)) if w > weight || (w == weight && label <= keyword.as_str()) => {
                Some((label, w))
            }
            _ => Some((keyword.as_str(), weight)),
        };
    }
    let (label, weight) = best.ok_or_else(|| Error::Internal("concept with empty intent".into()))?;
    let mut article_ids = BTreeSet::new();
    for &o in concept.extent() {
        let unit = units
            .get(o)
            .ok_or_else(|| Error::Internal(format!("object {o} has no sentence unit")))?;
        let owner = if unit.article_id.is_empty() {
            &unit.id
        } else {
            &unit.article_id
        };
        article_ids.insert(owner.clone());
    }
    Ok(LabeledConcept {
        concepts: vec![concept.clone()],
        label: label.to_string(),
        weight,
        keywords,
        article_ids,
    })
}

fn by_weight_then_label(a: &LabeledConcept, b: &LabeledConcept) -> Ordering {
    b.weight
        .total_cmp(&a.weight)
        .then_with(|| a.label.cmp(&b.label))
}

/// Collapses concepts sharing a label into one, unioning their articles and
/// keywords. Output is ordered by descending weight, then label.
pub fn merge_duplicate_labels(labeled: Vec<LabeledConcept>) -> Vec<LabeledConcept> {
    let mut merged: BTreeMap<String, LabeledConcept> = BTreeMap::new();
    for lc in labeled {
        match merged.get_mut(&lc.label) {
            Some(existing) => {
                existing.concepts.extend(lc.concepts);
                existing.keywords.extend(lc.keywords);
                existing.article_ids.extend(lc.article_ids);
            }
            None => {
                merged.insert(lc.label.clone(), lc);
            }
        }
    }
    let mut out: Vec<_> = merged.into_values().collect();
    out.sort_by(by_weight_then_label);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: String,
    pub label: String,
    pub weight: f64,
    pub count: usize,
    pub articles: Vec<String>,
    pub children: Vec<String>,
}

/// Keyword nodes in heap layout: node `i`'s children sit at positions
/// `arity·i + 1 ..= arity·i + arity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptTree {
    pub arity: usize,
    pub root: Option<String>,
    pub nodes: Vec<TreeNode>,
}

pub fn build_tree(labeled: Vec<LabeledConcept>, arity: usize) -> Result<ConceptTree> {
    if arity < 2 {
        return Err(Error::invalid(format!("arity must be at least 2, got {arity}")));
    }
    let mut seen = BTreeSet::new();
    for lc in &labeled {
        if !seen.insert(lc.label.as_str()) {
            return Err(Error::invalid(format!("duplicate label {:?}", lc.label)));
        }
    }
    let mut labeled = labeled;
    labeled.sort_by(by_weight_then_label);
    let n = labeled.len();
    let nodes = labeled
        .into_iter()
        .enumerate()
        .map(|(i, lc)| TreeNode {
            id: node_id(i),
            label: lc.label,
            weight: lc.weight,
            count: lc.article_ids.len(),
            articles: lc.article_ids.into_iter().collect(),
            children: (arity * i + 1..=arity * i + arity)
                .take_while(|&c| c < n)
                .map(node_id)
                .collect(),
        })
        .collect();
    Ok(ConceptTree {
        arity,
        root: (n > 0).then(|| node_id(0)),
        nodes,
    })
}

fn node_id(position: usize) -> String {
    format!("n{position}")
}

/// Article ids of a node, sorted.
pub fn articles_for_node(tree: &ConceptTree, node_id: &str) -> Result<Vec<String>> {
    let node = tree
        .node(node_id)
        .ok_or_else(|| Error::NotFound(format!("node {node_id}")))?;
    let mut articles = node.articles.clone();
    articles.sort();
    Ok(articles)
}

impl ConceptTree {
    pub fn empty(arity: usize) -> Self {
        ConceptTree {
            arity,
            root: None,
            nodes: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&TreeNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Parent → child pairs.
    pub fn edges(&self) -> impl Iterator<Item = (&TreeNode, &TreeNode)> + '_ {
        self.nodes.iter().flat_map(move |parent| {
            parent
                .children
                .iter()
                .filter_map(move |c| self.node(c).map(|child| (parent, child)))
        })
    }

    /// Number of levels; zero for an empty tree.
    pub fn depth(&self) -> usize {
        fn walk(tree: &ConceptTree, id: &str) -> usize {
            let node = tree.node(id).expect("child ids resolve");
            1 + node.children.iter().map(|c| walk(tree, c)).max().unwrap_or(0)
        }
        self.root.as_deref().map_or(0, |r| walk(self, r))
    }

    /// Every article id referenced by any node.
    pub fn article_ids(&self) -> BTreeSet<&str> {
        self.nodes
            .iter()
            .flat_map(|n| n.articles.iter().map(String::as_str))
            .collect()
    }

    /// Checks the structural invariants, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        let mut labels = BTreeSet::new();
        for node in &self.nodes {
            if !labels.insert(node.label.as_str()) {
                return Err(Error::invalid(format!("duplicate label {:?}", node.label)));
            }
            if node.count != node.articles.len() {
                return Err(Error::invalid(format!("node {} count mismatch", node.id)));
            }
            if node.children.len() > self.arity {
                return Err(Error::invalid(format!("node {} exceeds arity", node.id)));
            }
            for c in &node.children {
                if self.node(c).is_none() {
                    return Err(Error::invalid(format!("node {} has unknown child {c}", node.id)));
                }
            }
        }
        for (parent, child) in self.edges() {
            if parent.weight < child.weight {
                return Err(Error::invalid(format!(
                    "heap order broken on {} -> {}",
                    parent.id, child.id
                )));
            }
        }
        match &self.root {
            Some(r) if self.node(r).is_none() => Err(Error::invalid(format!("unknown root {r}"))),
            None if !self.nodes.is_empty() => Err(Error::invalid("non-empty tree without root")),
            _ => Ok(()),
        }
    }

    /// Canonical JSON serialization, pretty-printed with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tree serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let tree: ConceptTree =
            serde_json::from_slice(bytes).map_err(|e| Error::from_json(bytes, e))?;
        tree.validate()?;
        Ok(tree)
    }

    /// One `label (count)` line per node, children indented two spaces under
    /// their parent in heap-position order; `(empty)` for no nodes.
    pub fn render_text(&self) -> String {
        fn walk(tree: &ConceptTree, id: &str, depth: usize, out: &mut String) {
            let node = tree.node(id).expect("child ids resolve");
            out.push_str(&"  ".repeat(depth));
            out.push_str(&format!("{} ({})\n", node.label, node.count));
            for c in &node.children {
                walk(tree, c, depth + 1, out);
            }
        }
        let mut out = String::new();
        match &self.root {
            Some(r) => walk(self, r, 0, &mut out),
            None => out.push_str("(empty)\n"),
        }
        out
    }
}

/// Levels of a complete `arity`-ary heap holding `n` nodes:
/// `ceil(log_arity((arity − 1)·n + 1))`, in integer arithmetic.
pub fn complete_heap_depth(n: usize, arity: usize) -> usize {
    let target = (arity - 1) * n + 1;
    let mut depth = 0;
    let mut reach = 1;
    while reach < target {
        reach *= arity;
        depth += 1;
    }
    depth
}
