use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::{Route, StockSet};
use crate::smiles::CanonicalKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub passed: bool,
    /// Keys of the molecules that break the check.
    pub offending: Vec<CanonicalKey>,
}

impl Check {
    fn from_offending(offending: BTreeSet<CanonicalKey>) -> Self {
        Check {
            passed: offending.is_empty(),
            offending: offending.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// The target is the only sink and is never consumed.
    pub target_convergence: Check,
    pub acyclicity: Check,
    /// Every leaf is in the stock set.
    pub grounding: Check,
    /// Every non-leaf molecule is produced by exactly one reaction.
    pub stepwise_linkage: Check,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.target_convergence.passed
            && self.acyclicity.passed
            && self.grounding.passed
            && self.stepwise_linkage.passed
    }

    pub fn structural_passed(&self) -> bool {
        self.target_convergence.passed && self.acyclicity.passed && self.stepwise_linkage.passed
    }
}

pub fn validate_route(route: &Route, stock: &StockSet) -> ValidationReport {
    let target = route.target_key();
    let producers = route.producers();

    let mut consumed: BTreeSet<&CanonicalKey> = BTreeSet::new();
    for r in route.reactions() {
        consumed.extend(r.precursor_keys());
    }

    let mut convergence = BTreeSet::new();
    if consumed.contains(target) {
        convergence.insert(target.clone());
    }
    if !route.reactions().is_empty() && !producers.contains_key(target) {
        convergence.insert(target.clone());
    }
    for r in route.reactions() {
        let k = r.product_key();
        if k != target && !consumed.contains(k) {
            convergence.insert(k.clone());
        }
    }

    let linkage = producers
        .iter()
        .filter(|(_, rs)| rs.len() > 1)
        .map(|(k, _)| (*k).clone())
        .collect();

    let grounding = route
        .leaves()
        .into_iter()
        .filter(|k| !stock.contains(k))
        .collect();

    ValidationReport {
        target_convergence: Check::from_offending(convergence),
        acyclicity: Check::from_offending(cyclic_keys(route)),
        grounding: Check::from_offending(grounding),
        stepwise_linkage: Check::from_offending(linkage),
    }
}

/// Keys lying on a directed cycle of the product -> precursor graph.
fn cyclic_keys(route: &Route) -> BTreeSet<CanonicalKey> {
    let mut edges: HashMap<&CanonicalKey, BTreeSet<&CanonicalKey>> = HashMap::new();
    for r in route.reactions() {
        edges
            .entry(r.product_key())
            .or_default()
            .extend(r.precursor_keys());
    }
    let mut out = BTreeSet::new();
    for &start in edges.keys() {
        // start is cyclic iff it is reachable from one of its successors
        let mut stack: Vec<&CanonicalKey> = edges[start].iter().copied().collect();
        let mut seen: BTreeSet<&CanonicalKey> = BTreeSet::new();
        while let Some(k) = stack.pop() {
            if k == start {
                out.insert(start.clone());
                break;
            }
            if seen.insert(k) {
                if let Some(next) = edges.get(k) {
                    stack.extend(next.iter().copied());
                }
            }
        }
    }
    out
}
