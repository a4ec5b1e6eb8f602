use fixedbitset::FixedBitSet;

use super::concept::{optimal_rectangle, Concept};
use super::context::FormalContext;
use crate::error::Result;

/// A list of concepts jointly containing every incidence pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    rectangles: Vec<Concept>,
    covered: Vec<FixedBitSet>,
}

impl Coverage {
    pub fn rectangles(&self) -> &[Concept] {
        &self.rectangles
    }

    pub fn into_rectangles(self) -> Vec<Concept> {
        self.rectangles
    }

    pub fn is_covered(&self, object: usize, attribute: usize) -> bool {
        self.covered.get(object).is_some_and(|row| row.contains(attribute))
    }

    /// Covered incidence pairs, row-major.
    pub fn covered(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.covered
            .iter()
            .enumerate()
            .flat_map(|(o, row)| row.ones().map(move |a| (o, a)))
    }

    pub fn is_complete(&self, context: &FormalContext) -> bool {
        context.incidence().all(|(o, a)| self.is_covered(o, a))
    }
}

/// Covers the relation with optimal concepts.
///
/// Incidence pairs are scanned row-major; each pair not yet covered
/// contributes its optimal concept. A final pass drops, in insertion order,
/// any concept whose every cell is also covered by the concepts still kept,
/// so the result is irredundant as well as duplicate-free.
pub fn coverage_elements(context: &FormalContext) -> Result<Coverage> {
    #[cfg(feature = "parallel")]
    {
        parallel::coverage_elements(context)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::coverage_elements(context)
    }
}

fn empty_cover(context: &FormalContext) -> Vec<FixedBitSet> {
    vec![FixedBitSet::with_capacity(context.n_attributes()); context.n_objects()]
}

fn mark(covered: &mut [FixedBitSet], concept: &Concept) {
    for &o in concept.extent() {
        for &a in concept.intent() {
            covered[o].insert(a);
        }
    }
}

/// Drops concepts whose cells are all covered at least twice, updating the
/// multiplicities as it goes.
fn prune_redundant(context: &FormalContext, picked: Vec<Concept>) -> Vec<Concept> {
    let width = context.n_attributes();
    let mut multiplicity = vec![0u32; context.n_objects() * width];
    for c in &picked {
        for (o, a) in c.rectangle().cells() {
            multiplicity[o * width + a] += 1;
        }
    }
    let mut kept = Vec::with_capacity(picked.len());
    for c in picked {
        if c.rectangle().cells().all(|(o, a)| multiplicity[o * width + a] >= 2) {
            for (o, a) in c.rectangle().cells() {
                multiplicity[o * width + a] -= 1;
            }
        } else {
            kept.push(c);
        }
    }
    kept
}

fn finish(context: &FormalContext, picked: Vec<Concept>) -> Coverage {
    let rectangles = prune_redundant(context, picked);
    let mut covered = empty_cover(context);
    for c in &rectangles {
        mark(&mut covered, c);
    }
    Coverage {
        rectangles,
        covered,
    }
}

pub mod sequential {
    use super::*;

    /// Greedy scan computing optimal concepts lazily, only for uncovered pairs.
    pub fn coverage_elements(context: &FormalContext) -> Result<Coverage> {
        let mut covered = empty_cover(context);
        let mut picked: Vec<Concept> = Vec::new();
        for (o, a) in context.incidence() {
            if covered[o].contains(a) {
                continue;
            }
            let concept = optimal_rectangle(context, (o, a))?;
            mark(&mut covered, &concept);
            if !picked.contains(&concept) {
                picked.push(concept);
            }
        }
        Ok(finish(context, picked))
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    use super::*;

    /// Speculative greedy scan: the next batch of uncovered pairs has its
    /// optimal concepts computed in parallel, then the batch is replayed in
    /// row-major order, skipping pairs an earlier concept already covered.
    /// Each answer depends only on the context and its pair, so the result is
    /// identical to the sequential scan.
    pub fn coverage_elements(context: &FormalContext) -> Result<Coverage> {
        let batch = rayon::current_num_threads().max(1) * 2;
        let mut covered = empty_cover(context);
        let mut picked: Vec<Concept> = Vec::new();
        let mut pairs = context.incidence().peekable();
        while pairs.peek().is_some() {
            let next: Vec<(usize, usize)> = pairs
                .by_ref()
                .filter(|&(o, a)| !covered[o].contains(a))
                .take(batch)
                .collect();
            let optimal: Vec<Concept> = next
                .par_iter()
                .map(|&pair| optimal_rectangle(context, pair))
                .collect::<Result<_>>()?;
            for ((o, a), concept) in next.into_iter().zip(optimal) {
                if covered[o].contains(a) {
                    continue;
                }
                mark(&mut covered, &concept);
                if !picked.contains(&concept) {
                    picked.push(concept);
                }
            }
        }
        Ok(finish(context, picked))
    }
}
