use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of objects, a finite set of attributes and the binary
/// incidence relation between them.
///
/// Rows (per object) and columns (per attribute) are both kept as bitsets so
/// that either derivation is a chain of word-wise intersections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    rows: Vec<FixedBitSet>,
    cols: Vec<FixedBitSet>,
}

/// On-disk shape: `{"objects": [...], "attributes": [...], "incidence": [[o, a], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextFile {
    pub objects: Vec<String>,
    pub attributes: Vec<String>,
    pub incidence: Vec<[usize; 2]>,
}

impl FormalContext {
    pub fn new(
        objects: Vec<String>,
        attributes: Vec<String>,
        incidence: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        ensure_unique("object", &objects)?;
        ensure_unique("attribute", &attributes)?;
        let mut ctx = FormalContext {
            rows: vec![FixedBitSet::with_capacity(attributes.len()); objects.len()],
            cols: vec![FixedBitSet::with_capacity(objects.len()); attributes.len()],
            objects,
            attributes,
        };
        for (o, a) in incidence {
            ctx.check_object(o)?;
            ctx.check_attribute(a)?;
            ctx.rows[o].insert(a);
            ctx.cols[a].insert(o);
        }
        Ok(ctx)
    }

    pub fn empty() -> Self {
        FormalContext {
            objects: Vec::new(),
            attributes: Vec::new(),
            rows: Vec::new(),
            cols: Vec::new(),
        }
    }

    /// Builds a context from a dense 0/1 matrix, naming objects `o1..` and
    /// attributes `p1..`. Mostly useful in tests.
    pub fn from_matrix(matrix: &[Vec<bool>]) -> Self {
        let n_attrs = matrix.first().map_or(0, Vec::len);
        let objects = (1..=matrix.len()).map(|i| format!("o{i}")).collect();
        let attributes = (1..=n_attrs).map(|j| format!("p{j}")).collect();
        let incidence = matrix.iter().enumerate().flat_map(|(o, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &bit)| bit)
                .map(move |(a, _)| (o, a))
        });
        Self::new(objects, attributes, incidence).expect("generated names are unique")
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    pub fn has(&self, object: usize, attribute: usize) -> bool {
        self.rows
            .get(object)
            .is_some_and(|row| row.contains(attribute))
    }

    pub fn row(&self, object: usize) -> &FixedBitSet {
        &self.rows[object]
    }

    pub fn column(&self, attribute: usize) -> &FixedBitSet {
        &self.cols[attribute]
    }

    pub fn incidence_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    /// Incidence pairs in row-major order (object order, then attribute order).
    pub fn incidence(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(o, row)| row.ones().map(move |a| (o, a)))
    }

    /// Attributes shared by every object in `objects`; all attributes for the
    /// empty set.
    pub fn derive_intent(&self, objects: &[usize]) -> Result<Vec<usize>> {
        for &o in objects {
            self.check_object(o)?;
        }
        Ok(self.intent_of(objects.iter().copied()).ones().collect())
    }

    /// Objects having every attribute in `attributes`; all objects for the
    /// empty set.
    pub fn derive_extent(&self, attributes: &[usize]) -> Result<Vec<usize>> {
        for &a in attributes {
            self.check_attribute(a)?;
        }
        Ok(self.extent_of(attributes.iter().copied()).ones().collect())
    }

    pub(crate) fn intent_of(&self, objects: impl IntoIterator<Item = usize>) -> FixedBitSet {
        let mut acc = full_set(self.attributes.len());
        for o in objects {
            acc.intersect_with(&self.rows[o]);
        }
        acc
    }

    pub(crate) fn extent_of(&self, attributes: impl IntoIterator<Item = usize>) -> FixedBitSet {
        let mut acc = full_set(self.objects.len());
        for a in attributes {
            acc.intersect_with(&self.cols[a]);
        }
        acc
    }

    pub fn to_file(&self) -> ContextFile {
        ContextFile {
            objects: self.objects.clone(),
            attributes: self.attributes.clone(),
            incidence: self.incidence().map(|(o, a)| [o, a]).collect(),
        }
    }

    pub fn from_file(file: ContextFile) -> Result<Self> {
        Self::new(
            file.objects,
            file.attributes,
            file.incidence.into_iter().map(|[o, a]| (o, a)),
        )
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: ContextFile =
            serde_json::from_slice(bytes).map_err(|e| Error::from_json(bytes, e))?;
        Self::from_file(file)
    }

    fn check_object(&self, o: usize) -> Result<()> {
        if o >= self.objects.len() {
            return Err(Error::invalid(format!(
                "object index {o} out of range (context has {})",
                self.objects.len()
            )));
        }
        Ok(())
    }

    fn check_attribute(&self, a: usize) -> Result<()> {
        if a >= self.attributes.len() {
            return Err(Error::invalid(format!(
                "attribute index {a} out of range (context has {})",
                self.attributes.len()
            )));
        }
        Ok(())
    }
}

pub(crate) fn full_set(len: usize) -> FixedBitSet {
    let mut set = FixedBitSet::with_capacity(len);
    set.insert_range(..);
    set
}

fn ensure_unique(kind: &str, names: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::invalid(format!("duplicate {kind} identifier {name:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::FormalContext;

    /// The three-by-three context used throughout the relation tests.
    pub fn k1() -> FormalContext {
        FormalContext::new(
            vec!["O1".into(), "O2".into(), "O3".into()],
            vec!["P1".into(), "P2".into(), "P3".into()],
            [(0, 0), (0, 1), (1, 0), (1, 1), (2, 1), (2, 2)],
        )
        .unwrap()
    }
}
