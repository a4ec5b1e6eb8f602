//! Exhaustive reference search for optimal rectangles.
//!
//! Deliberately naive: subsets are bitmasks, closures are recomputed cell by
//! cell through [`FormalContext::has`], and nothing here calls into the
//! concept enumeration or bitset derivations used by
//! [`optimal_rectangle`](crate::relation::optimal_rectangle).

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::relation::{optimal_rectangle, FormalContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Every `A × B` inside the relation containing the element.
    AllRectangles,
    /// Every formal concept containing the element.
    AllConcepts,
}

impl OracleMode {
    /// Largest number of objects and of attributes the mode accepts.
    pub fn bound(self) -> usize {
        match self {
            OracleMode::AllRectangles => 5,
            OracleMode::AllConcepts => 8,
        }
    }

    pub fn check_bounds(self, context: &FormalContext) -> Result<()> {
        let bound = self.bound();
        if context.n_objects() > bound || context.n_attributes() > bound {
            return Err(Error::invalid(format!(
                "{self} mode accepts contexts up to {bound}×{bound}, got {}×{}",
                context.n_objects(),
                context.n_attributes()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMode::AllRectangles => "all-rectangles",
            OracleMode::AllConcepts => "all-concepts",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub extent: Vec<usize>,
    pub intent: Vec<usize>,
}

impl Block {
    fn gain(&self) -> i64 {
        let (a, b) = (self.extent.len() as i64, self.intent.len() as i64);
        a * b - a - b
    }

    pub fn display(&self, context: &FormalContext) -> String {
        let objs: Vec<&str> = self.extent.iter().map(|&o| context.objects()[o].as_str()).collect();
        let attrs: Vec<&str> =
            self.intent.iter().map(|&a| context.attributes()[a].as_str()).collect();
        format!("({{{}}},{{{}}})", objs.join(","), attrs.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub element: (usize, usize),
    pub max_gain: i64,
    /// How many candidates reach `max_gain`.
    pub maximizers: usize,
    pub expected: Block,
    pub actual: Block,
}

impl Verdict {
    pub fn agrees(&self) -> bool {
        self.expected == self.actual
    }
}

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn common_attributes(context: &FormalContext, objects: &[usize]) -> Vec<usize> {
    (0..context.n_attributes())
        .filter(|&a| objects.iter().all(|&o| context.has(o, a)))
        .collect()
}

fn common_objects(context: &FormalContext, attributes: &[usize]) -> Vec<usize> {
    (0..context.n_objects())
        .filter(|&o| attributes.iter().all(|&a| context.has(o, a)))
        .collect()
}

fn is_closed(context: &FormalContext, block: &Block) -> bool {
    common_attributes(context, &block.extent) == block.intent
        && common_objects(context, &block.intent) == block.extent
}

/// Higher gain, then larger extent, then smallest sorted intent labels.
fn pick<'a>(context: &FormalContext, candidates: impl Iterator<Item = &'a Block>) -> Option<&'a Block> {
    let key = |b: &Block| {
        let mut labels: Vec<String> =
            b.intent.iter().map(|&a| context.attributes()[a].clone()).collect();
        labels.sort();
        (std::cmp::Reverse(b.gain()), std::cmp::Reverse(b.extent.len()), labels)
    };
    candidates.min_by_key(|b| key(b))
}

fn all_rectangles(context: &FormalContext, (o, a): (usize, usize)) -> Vec<Block> {
    let (n, m) = (context.n_objects(), context.n_attributes());
    let mut out = Vec::new();
    for om in 1u32..(1 << n) {
        if om >> o & 1 == 0 {
            continue;
        }
        let extent = members(om, n);
        for am in 1u32..(1 << m) {
            if am >> a & 1 == 0 {
                continue;
            }
            let intent = members(am, m);
            if extent.iter().all(|&x| intent.iter().all(|&y| context.has(x, y))) {
                out.push(Block {
                    extent: extent.clone(),
                    intent,
                });
            }
        }
    }
    out
}

fn all_concepts(context: &FormalContext) -> Vec<Block> {
    let n = context.n_objects();
    let mut seen = BTreeSet::new();
    for om in 0u32..(1 << n) {
        let intent = common_attributes(context, &members(om, n));
        let extent = common_objects(context, &intent);
        if !intent.is_empty() && !extent.is_empty() {
            seen.insert((extent, intent));
        }
    }
    seen.into_iter()
        .map(|(extent, intent)| Block { extent, intent })
        .collect()
}

/// Brute-force reference answer for `element`, plus what the production
/// search returns for it.
pub fn check_element(context: &FormalContext, element: (usize, usize), mode: OracleMode) -> Result<Verdict> {
    mode.check_bounds(context)?;
    if !context.has(element.0, element.1) {
        return Err(Error::invalid(format!("{element:?} is not in the incidence relation")));
    }
    let candidates: Vec<Block> = match mode {
        OracleMode::AllRectangles => all_rectangles(context, element),
        OracleMode::AllConcepts => all_concepts(context)
            .into_iter()
            .filter(|b| b.extent.contains(&element.0) && b.intent.contains(&element.1))
            .collect(),
    };
    let max_gain = candidates.iter().map(Block::gain).max().expect("the element itself is a rectangle");
    let maximizers = candidates.iter().filter(|b| b.gain() == max_gain).count();
    // Unclosed rectangles may tie with their closure (a single row gains
    // nothing per added column), so the tie-break ranges over closed maximizers.
    let expected = pick(
        context,
        candidates
            .iter()
            .filter(|b| b.gain() == max_gain && is_closed(context, b)),
    )
    .cloned()
    .ok_or_else(|| Error::Internal("no closed rectangle reaches the maximum gain".into()))?;

    let found = optimal_rectangle(context, element)?;
    Ok(Verdict {
        element,
        max_gain,
        maximizers,
        expected,
        actual: Block {
            extent: found.extent().to_vec(),
            intent: found.intent().to_vec(),
        },
    })
}

/// Runs [`check_element`] for every incidence pair, row-major.
pub fn check_all(context: &FormalContext, mode: OracleMode) -> Result<Vec<Verdict>> {
    mode.check_bounds(context)?;
    context
        .incidence()
        .map(|e| check_element(context, e, mode))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::fixtures::k1;

    #[test]
    fn k1_all_agree_in_both_modes() {
        let k = k1();
        for mode in [OracleMode::AllRectangles, OracleMode::AllConcepts] {
            let verdicts = check_all(&k, mode).unwrap();
            assert_eq!(verdicts.len(), 6);
            assert!(verdicts.iter().all(Verdict::agrees));
        }
    }

    #[test]
    fn o3_p3_maximizers_tie() {
        let k = k1();
        let v = check_element(&k, (2, 2), OracleMode::AllRectangles).unwrap();
        assert!(v.agrees());
        assert_eq!(v.expected.display(&k), "({O3},{P2,P3})");
        // ({O3},{P3}) ties with ({O3},{P2,P3}) at gain -1.
        assert_eq!(v.max_gain, -1);
        assert_eq!(v.maximizers, 2);
    }

    #[test]
    fn bounds_are_enforced() {
        let big = FormalContext::from_matrix(&vec![vec![true; 6]; 6]);
        assert!(check_all(&big, OracleMode::AllRectangles).is_err());
        assert!(check_all(&big, OracleMode::AllConcepts).is_ok());
    }
}
