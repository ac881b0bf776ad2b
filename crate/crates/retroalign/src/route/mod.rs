//! Retrosynthetic routes: a target, the reactions that decompose it and the
//! starting materials they bottom out in.
//!
//! Molecules are identified across reactions by [`CanonicalKey`], so the
//! same intermediate written with different atom maps (as a precursor of one
//! step and as the product of the next) is one vertex of the route graph.

mod dataset;
pub(crate) mod tree;
mod validate;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::smiles::{canonical_key, CanonicalKey, Molecule, SmilesError};

pub use dataset::{
    dataset_to_string, ingest_dataset, parse_dataset, parse_records, write_dataset, DatasetError,
    DatasetRecord, ReactionJson, RecordJson, StockSet,
};
pub use tree::{linearize, to_tree, Duplication, NodeId, RouteTree, TreeNode};
pub use validate::{validate_route, Check, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("reaction has no precursors")]
    NoPrecursors,
    #[error("cycle through {0}")]
    Cycle(CanonicalKey),
    #[error("expected a single molecule, got {0} components in '{1}'")]
    MultiComponent(usize, String),
    #[error(transparent)]
    Smiles(#[from] SmilesError),
}

/// One retrosynthetic step: a product and the precursors it is made from,
/// with the atom correspondence between them.
#[derive(Debug, Clone)]
pub struct Reaction {
    product: Molecule,
    precursors: Vec<Molecule>,
    /// `atom_map[i][a]` is the product atom matched to atom `a` of precursor `i`.
    atom_map: Vec<Vec<Option<usize>>>,
    product_key: CanonicalKey,
    precursor_keys: Vec<CanonicalKey>,
}

impl Reaction {
    /// Builds the atom map from shared atom-map numbers. Precursor atoms
    /// without a number, or whose number is absent from the product, are
    /// unmapped.
    pub fn new(product: Molecule, precursors: Vec<Molecule>) -> Result<Self, RouteError> {
        let by_number = product.map_index();
        let atom_map = precursors
            .iter()
            .map(|p| {
                p.atoms()
                    .iter()
                    .map(|a| a.map_number.and_then(|n| by_number.get(&n).copied()))
                    .collect()
            })
            .collect();
        Self::with_atom_map(product, precursors, atom_map)
    }

    pub fn with_atom_map(
        product: Molecule,
        precursors: Vec<Molecule>,
        atom_map: Vec<Vec<Option<usize>>>,
    ) -> Result<Self, RouteError> {
        if precursors.is_empty() {
            return Err(RouteError::NoPrecursors);
        }
        assert_eq!(atom_map.len(), precursors.len());
        let product_key = canonical_key(&product);
        let precursor_keys = precursors.iter().map(canonical_key).collect();
        Ok(Reaction {
            product,
            precursors,
            atom_map,
            product_key,
            precursor_keys,
        })
    }

    pub fn from_smiles(product: &str, precursors: &[&str]) -> Result<Self, RouteError> {
        let product = single_molecule(product)?;
        let precursors = precursors
            .iter()
            .map(|s| single_molecule(s))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(product, precursors)
    }

    pub fn product(&self) -> &Molecule {
        &self.product
    }

    pub fn precursors(&self) -> &[Molecule] {
        &self.precursors
    }

    pub fn product_key(&self) -> &CanonicalKey {
        &self.product_key
    }

    pub fn precursor_keys(&self) -> &[CanonicalKey] {
        &self.precursor_keys
    }

    /// Product atom matched to `atom` of precursor `precursor`, if any.
    pub fn mapped_atom(&self, precursor: usize, atom: usize) -> Option<usize> {
        self.atom_map[precursor][atom]
    }

    pub fn is_mapped(&self, precursor: usize) -> bool {
        self.atom_map[precursor].iter().any(Option::is_some)
    }
}

pub(crate) fn single_molecule(text: &str) -> Result<Molecule, RouteError> {
    let mut parts = crate::smiles::parse_smiles(text)?;
    if parts.len() != 1 {
        return Err(RouteError::MultiComponent(parts.len(), text.to_string()));
    }
    Ok(parts.pop().unwrap())
}

/// A retrosynthetic route rooted at `target`.
#[derive(Debug, Clone)]
pub struct Route {
    target: Molecule,
    target_key: CanonicalKey,
    reactions: Vec<Reaction>,
}

impl Route {
    pub fn new(target: Molecule, reactions: Vec<Reaction>) -> Self {
        let target_key = canonical_key(&target);
        Route {
            target,
            target_key,
            reactions,
        }
    }

    pub fn target(&self) -> &Molecule {
        &self.target
    }

    pub fn target_key(&self) -> &CanonicalKey {
        &self.target_key
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Reaction indices grouped by the key of their product.
    pub fn producers(&self) -> HashMap<&CanonicalKey, Vec<usize>> {
        let mut out: HashMap<&CanonicalKey, Vec<usize>> = HashMap::new();
        for (i, r) in self.reactions.iter().enumerate() {
            out.entry(r.product_key()).or_default().push(i);
        }
        out
    }

    /// The first reaction producing `key`.
    pub fn producer_of(&self, key: &CanonicalKey) -> Option<usize> {
        self.reactions.iter().position(|r| r.product_key() == key)
    }

    /// Leaf set: molecules that are never produced. A route without
    /// reactions has the target as its only leaf.
    pub fn leaves(&self) -> BTreeSet<CanonicalKey> {
        if self.reactions.is_empty() {
            return BTreeSet::from([self.target_key.clone()]);
        }
        let produced: BTreeSet<&CanonicalKey> =
            self.reactions.iter().map(Reaction::product_key).collect();
        self.reactions
            .iter()
            .flat_map(|r| r.precursor_keys())
            .filter(|k| !produced.contains(k))
            .cloned()
            .collect()
    }

    /// Leaf molecules with one representative per key, in first-seen order.
    pub fn leaf_molecules(&self) -> Vec<&Molecule> {
        if self.reactions.is_empty() {
            return vec![&self.target];
        }
        let leaves = self.leaves();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.reactions {
            for (m, k) in r.precursors().iter().zip(r.precursor_keys()) {
                if leaves.contains(k) && seen.insert(k) {
                    out.push(m);
                }
            }
        }
        out
    }
}

/// Longest leaf-to-target distance, counted in reactions.
pub fn route_depth(route: &Route) -> Result<usize, RouteError> {
    let producers = route.producers();
    let mut memo: HashMap<&CanonicalKey, usize> = HashMap::new();
    let mut on_path: Vec<&CanonicalKey> = Vec::new();
    depth_of(route, &producers, route.target_key(), &mut memo, &mut on_path)
}

fn depth_of<'r>(
    route: &'r Route,
    producers: &HashMap<&'r CanonicalKey, Vec<usize>>,
    key: &'r CanonicalKey,
    memo: &mut HashMap<&'r CanonicalKey, usize>,
    on_path: &mut Vec<&'r CanonicalKey>,
) -> Result<usize, RouteError> {
    if let Some(&d) = memo.get(key) {
        return Ok(d);
    }
    let Some(rs) = producers.get(key) else {
        return Ok(0);
    };
    if on_path.contains(&key) {
        return Err(RouteError::Cycle(key.clone()));
    }
    on_path.push(key);
    let mut deepest = 0;
    for pk in route.reactions()[rs[0]].precursor_keys() {
        deepest = deepest.max(depth_of(route, producers, pk, memo, on_path)?);
    }
    on_path.pop();
    memo.insert(key, deepest + 1);
    Ok(deepest + 1)
}
