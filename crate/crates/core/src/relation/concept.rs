use std::cmp::Ordering;
use std::collections::HashSet;

use fixedbitset::FixedBitSet;

use super::context::FormalContext;
use crate::error::{Error, Result};

/// Object-subset closure is exhaustive over `2^n` subsets; above this many
/// objects enumeration switches to attribute-incremented closures.
pub const SUBSET_ENUMERATION_MAX: usize = 20;

/// Gain of an `extent_size × intent_size` rectangle:
/// `|A|·|B| − (|A| + |B|)`.
pub fn gain(extent_size: usize, intent_size: usize) -> Result<i64> {
    if extent_size == 0 || intent_size == 0 {
        return Err(Error::invalid(format!(
            "rectangle sides must be positive, got {extent_size}×{intent_size}"
        )));
    }
    let (a, b) = (extent_size as i64, intent_size as i64);
    Ok(a * b - (a + b))
}

/// A non-empty `extent × intent` block contained in the incidence relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rectangle {
    extent: Vec<usize>,
    intent: Vec<usize>,
    gain: i64,
}

impl Rectangle {
    pub fn new(context: &FormalContext, mut extent: Vec<usize>, mut intent: Vec<usize>) -> Result<Self> {
        extent.sort_unstable();
        extent.dedup();
        intent.sort_unstable();
        intent.dedup();
        let gain = gain(extent.len(), intent.len())?;
        for &o in &extent {
            for &a in &intent {
                if !context.has(o, a) {
                    return Err(Error::invalid(format!(
                        "({o}, {a}) is not in the incidence relation"
                    )));
                }
            }
        }
        Ok(Rectangle {
            extent,
            intent,
            gain,
        })
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn intent(&self) -> &[usize] {
        &self.intent
    }

    pub fn gain(&self) -> i64 {
        self.gain
    }

    pub fn contains(&self, object: usize, attribute: usize) -> bool {
        self.extent.binary_search(&object).is_ok() && self.intent.binary_search(&attribute).is_ok()
    }

    /// Every `(object, attribute)` pair in the block, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.extent
            .iter()
            .flat_map(move |&o| self.intent.iter().map(move |&a| (o, a)))
    }

    pub fn is_closed(&self, context: &FormalContext) -> bool {
        context.intent_of(self.extent.iter().copied()).ones().eq(self.intent.iter().copied())
            && context.extent_of(self.intent.iter().copied()).ones().eq(self.extent.iter().copied())
    }
}

/// A formal concept: a rectangle whose extent and intent derive each other.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Concept {
    rectangle: Rectangle,
    closed: bool,
}

impl Concept {
    /// Wraps an already-closed rectangle; fails if it is not closed.
    pub fn from_rectangle(context: &FormalContext, rectangle: Rectangle) -> Result<Self> {
        if !rectangle.is_closed(context) {
            return Err(Error::invalid("rectangle is not closed under derivation"));
        }
        Ok(Concept {
            rectangle,
            closed: true,
        })
    }

    /// Built from bitsets already known to be a closed pair.
    pub(crate) fn from_closed_sets(extent: &FixedBitSet, intent: &FixedBitSet) -> Option<Self> {
        let extent: Vec<usize> = extent.ones().collect();
        let intent: Vec<usize> = intent.ones().collect();
        let gain = gain(extent.len(), intent.len()).ok()?;
        Some(Concept {
            rectangle: Rectangle {
                extent,
                intent,
                gain,
            },
            closed: true,
        })
    }

    pub fn rectangle(&self) -> &Rectangle {
        &self.rectangle
    }

    pub fn extent(&self) -> &[usize] {
        &self.rectangle.extent
    }

    pub fn intent(&self) -> &[usize] {
        &self.rectangle.intent
    }

    pub fn gain(&self) -> i64 {
        self.rectangle.gain
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn contains(&self, object: usize, attribute: usize) -> bool {
        self.rectangle.contains(object, attribute)
    }

    /// Renders as `({O1,O2},{P1,P2})` using the context's identifiers.
    pub fn display(&self, context: &FormalContext) -> String {
        let objs: Vec<&str> = self.extent().iter().map(|&o| context.objects()[o].as_str()).collect();
        let attrs: Vec<&str> = self
            .intent()
            .iter()
            .map(|&a| context.attributes()[a].as_str())
            .collect();
        format!("({{{}}},{{{}}})", objs.join(","), attrs.join(","))
    }
}

/// Sorted attribute labels of an intent; the lexicographic tie-break key.
pub fn intent_labels<'a>(context: &'a FormalContext, intent: &[usize]) -> Vec<&'a str> {
    let mut labels: Vec<&str> = intent.iter().map(|&a| context.attributes()[a].as_str()).collect();
    labels.sort_unstable();
    labels
}

/// Preference order among candidates for the same element: higher gain, then
/// larger extent, then lexicographically smallest intent labels.
/// `Ordering::Less` means `a` is preferred.
pub fn compare_candidates(context: &FormalContext, a: &Concept, b: &Concept) -> Ordering {
    b.gain()
        .cmp(&a.gain())
        .then_with(|| b.extent().len().cmp(&a.extent().len()))
        .then_with(|| intent_labels(context, a.intent()).cmp(&intent_labels(context, b.intent())))
}

/// All formal concepts with non-empty extent and intent, sorted by
/// descending extent size then lexicographic intent labels.
pub fn enumerate_concepts(context: &FormalContext, limit: usize) -> Result<Vec<Concept>> {
    let strategy = if context.n_objects() <= SUBSET_ENUMERATION_MAX {
        Enumeration::ObjectSubsets
    } else {
        Enumeration::NextClosure
    };
    enumerate_concepts_with(context, limit, strategy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enumeration {
    /// Close every object subset; exhaustive, at most 63 objects.
    ObjectSubsets,
    /// Attribute-incremented closures in lectic order.
    NextClosure,
}

/// [`enumerate_concepts`] with an explicit strategy.
pub fn enumerate_concepts_with(
    context: &FormalContext,
    limit: usize,
    strategy: Enumeration,
) -> Result<Vec<Concept>> {
    if context.n_objects() == 0 || context.n_attributes() == 0 {
        return Err(Error::invalid("context needs at least one object and one attribute"));
    }
    if limit == 0 {
        return Err(Error::invalid("limit must be positive"));
    }
    let mut concepts = match strategy {
        Enumeration::ObjectSubsets => by_object_subsets(context, limit)?,
        Enumeration::NextClosure => by_next_closure(context, limit)?,
    };
    sort_concepts(context, &mut concepts);
    Ok(concepts)
}

pub(crate) fn sort_concepts(context: &FormalContext, concepts: &mut [Concept]) {
    concepts.sort_by(|a, b| {
        b.extent()
            .len()
            .cmp(&a.extent().len())
            .then_with(|| intent_labels(context, a.intent()).cmp(&intent_labels(context, b.intent())))
    });
}

/// Closes every subset of objects: `X ↦ (X'', X')`.
pub(crate) fn by_object_subsets(context: &FormalContext, limit: usize) -> Result<Vec<Concept>> {
    let n = context.n_objects();
    if n > 63 {
        return Err(Error::invalid(format!("subset enumeration over {n} objects")));
    }
    let mut seen: HashSet<FixedBitSet> = HashSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let intent = context.intent_of((0..n).filter(|i| mask >> i & 1 == 1));
        if intent.is_clear() {
            continue;
        }
        let extent = context.extent_of(intent.ones());
        if extent.is_clear() || seen.contains(&extent) {
            continue;
        }
        if out.len() == limit {
            return Err(Error::Capacity { limit });
        }
        out.extend(Concept::from_closed_sets(&extent, &intent));
        seen.insert(extent);
    }
    Ok(out)
}

/// Ganter's NextClosure over attributes: emits each closed intent once, in
/// lectic order.
pub(crate) fn by_next_closure(context: &FormalContext, limit: usize) -> Result<Vec<Concept>> {
    let m = context.n_attributes();
    let close = |set: &FixedBitSet| context.intent_of(context.extent_of(set.ones()).ones());
    let mut out = Vec::new();
    let mut current = close(&FixedBitSet::with_capacity(m));
    loop {
        if !current.is_clear() {
            let extent = context.extent_of(current.ones());
            if !extent.is_clear() {
                if out.len() == limit {
                    return Err(Error::Capacity { limit });
                }
                out.extend(Concept::from_closed_sets(&extent, &current));
            }
        }
        match next_closed(&current, m, &close) {
            Some(next) => current = next,
            None => break,
        }
    }
    Ok(out)
}

fn next_closed(
    current: &FixedBitSet,
    m: usize,
    close: &impl Fn(&FixedBitSet) -> FixedBitSet,
) -> Option<FixedBitSet> {
    let mut prefix = current.clone();
    for i in (0..m).rev() {
        if prefix.contains(i) {
            prefix.set(i, false);
            continue;
        }
        let mut candidate = prefix.clone();
        candidate.insert(i);
        let closed = close(&candidate);
        // Canonicity: the closure may not add anything below `i`.
        if closed.ones().take_while(|&j| j < i).eq(prefix.ones()) {
            return Some(closed);
        }
    }
    None
}

/// The maximal-gain formal concept containing `element`, under the
/// preference order of [`compare_candidates`].
///
/// Every rectangle containing the element extends to the closure of its
/// extent without losing gain, so searching concepts finds the global
/// maximum. Concepts containing `(o, a)` are exactly the concepts of the
/// sub-context restricted to the objects having `a` and the attributes of `o`;
/// the smaller side of that sub-context is enumerated.
pub fn optimal_rectangle(context: &FormalContext, element: (usize, usize)) -> Result<Concept> {
    let (o, a) = element;
    if !context.has(o, a) {
        return Err(Error::invalid(format!("({o}, {a}) is not in the incidence relation")));
    }
    let objects: Vec<usize> = context.column(a).ones().filter(|&x| x != o).collect();
    let attributes: Vec<usize> = context.row(o).ones().filter(|&x| x != a).collect();

    let mut best: Option<Concept> = None;
    let mut consider = |candidate: Concept| {
        let better = match &best {
            None => true,
            Some(current) => compare_candidates(context, &candidate, current) == Ordering::Less,
        };
        if better {
            best = Some(candidate);
        }
    };

    if objects.len().min(attributes.len()) <= SUBSET_ENUMERATION_MAX {
        if objects.len() <= attributes.len() {
            for mask in 0u64..(1u64 << objects.len()) {
                let chosen = std::iter::once(o).chain(select(&objects, mask));
                let intent = context.intent_of(chosen);
                let extent = context.extent_of(intent.ones());
                consider(Concept::from_closed_sets(&extent, &intent).expect("contains element"));
            }
        } else {
            for mask in 0u64..(1u64 << attributes.len()) {
                let chosen = std::iter::once(a).chain(select(&attributes, mask));
                let extent = context.extent_of(chosen);
                let intent = context.intent_of(extent.ones());
                consider(Concept::from_closed_sets(&extent, &intent).expect("contains element"));
            }
        }
    } else {
        let (sub, obj_map, attr_map) = restrict(context, o, a);
        for local in by_next_closure(&sub, usize::MAX)? {
            let extent = context.extent_of(local.intent().iter().map(|&j| attr_map[j]));
            debug_assert!(local.extent().iter().all(|&i| extent.contains(obj_map[i])));
            let intent = context.intent_of(extent.ones());
            consider(Concept::from_closed_sets(&extent, &intent).expect("contains element"));
        }
    }
    best.ok_or_else(|| Error::Internal("no concept contains an incidence element".into()))
}

fn select(items: &[usize], mask: u64) -> impl Iterator<Item = usize> + '_ {
    items
        .iter()
        .enumerate()
        .filter(move |(i, _)| mask >> i & 1 == 1)
        .map(|(_, &x)| x)
}

/// Sub-context on the objects having `a` × the attributes of `o`.
fn restrict(context: &FormalContext, o: usize, a: usize) -> (FormalContext, Vec<usize>, Vec<usize>) {
    let obj_map: Vec<usize> = context.column(a).ones().collect();
    let attr_map: Vec<usize> = context.row(o).ones().collect();
    let incidence: Vec<(usize, usize)> = obj_map
        .iter()
        .enumerate()
        .flat_map(|(i, &obj)| {
            attr_map
                .iter()
                .enumerate()
                .filter(move |(_, &attr)| context.has(obj, attr))
                .map(move |(j, _)| (i, j))
        })
        .collect();
    let sub = FormalContext::new(
        obj_map.iter().map(|&i| context.objects()[i].clone()).collect(),
        attr_map.iter().map(|&j| context.attributes()[j].clone()).collect(),
        incidence,
    )
    .expect("restriction of a valid context");
    (sub, obj_map, attr_map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::context::fixtures::k1;

    fn shown(ctx: &FormalContext, cs: &[Concept]) -> Vec<String> {
        cs.iter().map(|c| c.display(ctx)).collect()
    }

    #[test]
    fn gain_examples() {
        assert_eq!(gain(2, 2).unwrap(), 0);
        assert_eq!(gain(1, 1).unwrap(), -1);
        assert_eq!(gain(3, 1).unwrap(), -1);
        assert!(matches!(gain(0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(gain(2, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn k1_concepts() {
        let k = k1();
        let cs = enumerate_concepts(&k, 100).unwrap();
        assert_eq!(
            shown(&k, &cs),
            ["({O1,O2,O3},{P2})", "({O1,O2},{P1,P2})", "({O3},{P2,P3})"]
        );
        assert!(matches!(enumerate_concepts(&k, 2), Err(Error::Capacity { limit: 2 })));
    }

    #[test]
    fn full_two_by_two_has_one_concept() {
        let k = FormalContext::from_matrix(&[vec![true, true], vec![true, true]]);
        let cs = enumerate_concepts(&k, 10).unwrap();
        assert_eq!(shown(&k, &cs), ["({o1,o2},{p1,p2})"]);
    }

    #[test]
    fn next_closure_matches_subset_closure() {
        let k = k1();
        let mut a = by_object_subsets(&k, 100).unwrap();
        let mut b = by_next_closure(&k, 100).unwrap();
        sort_concepts(&k, &mut a);
        sort_concepts(&k, &mut b);
        assert_eq!(a, b);
        assert!(matches!(by_next_closure(&k, 1), Err(Error::Capacity { limit: 1 })));
    }

    #[test]
    fn optimal_rectangle_examples() {
        let k = k1();
        let show = |e| optimal_rectangle(&k, e).unwrap().display(&k);
        assert_eq!(show((0, 0)), "({O1,O2},{P1,P2})");
        assert_eq!(show((2, 2)), "({O3},{P2,P3})");
        assert_eq!(show((1, 1)), "({O1,O2},{P1,P2})");
        // Gain tie at -1 between ({O1,O2,O3},{P2}) and ({O3},{P2,P3}).
        assert_eq!(show((2, 1)), "({O1,O2,O3},{P2})");
        assert!(matches!(optimal_rectangle(&k, (1, 2)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rectangle_validation() {
        let k = k1();
        assert!(Rectangle::new(&k, vec![0, 1], vec![0]).is_ok());
        assert!(Rectangle::new(&k, vec![0, 2], vec![0]).is_err());
        assert!(Rectangle::new(&k, vec![], vec![0]).is_err());
        let open = Rectangle::new(&k, vec![0], vec![0]).unwrap();
        assert!(!open.is_closed(&k));
        assert!(Concept::from_rectangle(&k, open).is_err());
        let closed = Rectangle::new(&k, vec![0, 1], vec![0, 1]).unwrap();
        assert!(Concept::from_rectangle(&k, closed).unwrap().is_closed());
    }
}
