//! Path-coherent rendering of a route as a sequence of reaction SMILES.
//!
//! Every step is written product first, rooted at the atom inherited from the
//! step above, and each precursor is rooted at the mapped atom that appears
//! earliest in the product text. Precursors are then listed in order of that
//! anchor position, so a fragment keeps the same leading atom and roughly the
//! same place in the string as it moves down the route.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::route::tree::walk_main_chain_first;
use crate::route::{linearize, to_tree, DatasetRecord, NodeId, RouteError, RouteTree};
use crate::smiles::{find_isomorphism, SmilesWriter, WriteOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("root atom {root} is out of range for a target of {atoms} atoms")]
    RootOutOfRange { root: usize, atoms: usize },
    #[error("no root assigned to tree node {0} before its reaction")]
    MissingRoot(NodeId),
    #[error("product of the reaction at node {0} does not match the molecule it produces")]
    ProductMismatch(NodeId),
    #[error(transparent)]
    Route(#[from] RouteError),
}

/// Root atom per tree node, indexed into [`RouteTree::molecule`] of that node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RootMap {
    assignment: HashMap<NodeId, usize>,
}

impl RootMap {
    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.assignment.get(&node).copied()
    }

    pub fn insert(&mut self, node: NodeId, root: usize) {
        self.assignment.insert(node, root);
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedStep {
    /// Tree node of the product.
    pub node: NodeId,
    /// Reactions from the target down to and including this one.
    pub depth: usize,
    pub product_text: String,
    pub product_root: usize,
    /// Precursor tree nodes, in output order.
    pub precursor_nodes: Vec<NodeId>,
    pub precursor_texts: Vec<String>,
    /// Earliest product position reached by each precursor's mapped atoms;
    /// `None` for unmapped precursors, which sort last.
    pub anchor_positions: Vec<Option<usize>>,
    /// Root atom chosen for each precursor.
    pub inherited_roots: Vec<usize>,
}

impl AlignedStep {
    pub fn line(&self) -> ReactionLine {
        ReactionLine {
            product: self.product_text.clone(),
            precursors: self.precursor_texts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedSequence {
    pub steps: Vec<AlignedStep>,
    pub target_root: usize,
}

impl AlignedSequence {
    pub fn lines(&self) -> Vec<ReactionLine> {
        self.steps.iter().map(AlignedStep::line).collect()
    }

    pub fn rendered(&self) -> RenderedRoute {
        RenderedRoute {
            lines: self.lines(),
            depths: self.steps.iter().map(|s| s.depth).collect(),
        }
    }
}

/// Route text with the depth of each line's reaction (1 for the reaction
/// producing the target).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedRoute {
    pub lines: Vec<ReactionLine>,
    pub depths: Vec<usize>,
}

/// One `PRODUCT>>P1.P2` line.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReactionLine {
    pub product: String,
    pub precursors: Vec<String>,
}

impl ReactionLine {
    /// The precursor side as written.
    pub fn rhs(&self) -> String {
        self.precursors.join(".")
    }
}

impl fmt::Display for ReactionLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>>{}", self.product, self.rhs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("missing '>>'")]
    NoArrow,
    #[error("more than one '>>'")]
    ExtraArrow,
    #[error("empty product")]
    EmptyProduct,
    #[error("empty precursor side")]
    EmptyPrecursors,
}

impl FromStr for ReactionLine {
    type Err = LineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (product, rhs) = s.split_once(">>").ok_or(LineError::NoArrow)?;
        if rhs.contains(">>") {
            return Err(LineError::ExtraArrow);
        }
        if product.is_empty() {
            return Err(LineError::EmptyProduct);
        }
        if rhs.is_empty() {
            return Err(LineError::EmptyPrecursors);
        }
        Ok(ReactionLine {
            product: product.to_string(),
            precursors: rhs.split('.').map(str::to_string).collect(),
        })
    }
}

/// Aligns the route with the target rooted at atom `r0`.
///
/// Reactions are emitted main chain first, where the main chain follows the
/// first non-leaf precursor in aligned order.
pub fn align_route(tree: &RouteTree<'_>, r0: usize) -> Result<AlignedSequence, AlignError> {
    let target = tree.molecule(tree.root());
    if r0 >= target.len() {
        return Err(AlignError::RootOutOfRange {
            root: r0,
            atoms: target.len(),
        });
    }
    let mut roots = RootMap::default();
    roots.insert(tree.root(), r0);

    let mut steps: HashMap<NodeId, AlignedStep> = HashMap::new();
    let mut failure = None;
    let order = walk_main_chain_first(
        tree.root(),
        |node| {
            if failure.is_some() {
                return Vec::new();
            }
            match align_step(tree, node, &mut roots) {
                Ok(step) => {
                    let next = step.precursor_nodes.clone();
                    steps.insert(node, step);
                    next
                }
                Err(e) => {
                    failure = Some(e);
                    Vec::new()
                }
            }
        },
        |n| tree.node(n).is_leaf(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(AlignedSequence {
        steps: order.into_iter().map(|n| steps.remove(&n).unwrap()).collect(),
        target_root: r0,
    })
}

fn align_step(
    tree: &RouteTree<'_>,
    node: NodeId,
    roots: &mut RootMap,
) -> Result<AlignedStep, AlignError> {
    let root = roots.get(node).ok_or(AlignError::MissingRoot(node))?;
    let reaction = tree.reaction(node).ok_or(AlignError::MissingRoot(node))?;
    // The product is written from the molecule instance the node stands for,
    // so its text is exactly the precursor text of the step above.
    let instance = tree.molecule(node);
    let to_instance =
        find_isomorphism(reaction.product(), instance).ok_or(AlignError::ProductMismatch(node))?;
    let plain = WriteOptions::plain();
    let product = SmilesWriter::new(instance).rooted_with(root, &plain);
    let position = product.positions();

    let children = &tree.node(node).children;
    let mut entries: Vec<(Option<usize>, usize, usize)> = Vec::with_capacity(children.len());
    for (i, precursor) in reaction.precursors().iter().enumerate() {
        let anchor = (0..precursor.len())
            .filter_map(|v| {
                reaction
                    .mapped_atom(i, v)
                    .map(|p| (position[to_instance[p]], v))
            })
            .min();
        let (pos, root) = match anchor {
            Some((p, v)) => (Some(p), v),
            None => (None, SmilesWriter::new(precursor).first_ranked()),
        };
        entries.push((pos, i, root));
    }
    // unmapped (None) last, then input order
    entries.sort_by_key(|&(pos, i, _)| (pos.is_none(), pos, i));

    let mut step = AlignedStep {
        node,
        depth: tree.node(node).depth + 1,
        product_text: product.text,
        product_root: root,
        precursor_nodes: Vec::with_capacity(entries.len()),
        precursor_texts: Vec::with_capacity(entries.len()),
        anchor_positions: Vec::with_capacity(entries.len()),
        inherited_roots: Vec::with_capacity(entries.len()),
    };
    for (pos, i, root) in entries {
        let child = children[i];
        roots.insert(child, root);
        let text = SmilesWriter::new(tree.molecule(child)).rooted_with(root, &plain).text;
        step.precursor_nodes.push(child);
        step.precursor_texts.push(text);
        step.anchor_positions.push(pos);
        step.inherited_roots.push(root);
    }
    Ok(step)
}

/// Aligns the route at up to `n` distinct target roots drawn without
/// replacement. Targets with fewer than `n` atoms yield one sequence per atom.
pub fn augment_roots(
    tree: &RouteTree<'_>,
    n: usize,
    seed: u64,
) -> Result<Vec<AlignedSequence>, AlignError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_roots(tree, n, &mut rng)
}

fn sample_roots(
    tree: &RouteTree<'_>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<AlignedSequence>, AlignError> {
    let atoms = tree.molecule(tree.root()).len();
    sample(rng, atoms, n.min(atoms))
        .into_iter()
        .map(|r0| align_route(tree, r0))
        .collect()
}

/// Each molecule written canonically, in plain linearized order with
/// precursors as listed in the route.
pub fn canonical_route(tree: &RouteTree<'_>) -> RenderedRoute {
    let plain = WriteOptions::plain();
    let write = |node: NodeId| {
        let m = tree.molecule(node);
        let w = SmilesWriter::new(m);
        w.rooted_with(w.first_ranked(), &plain).text
    };
    let order = linearize(tree);
    RenderedRoute {
        depths: order.iter().map(|&n| tree.node(n).depth + 1).collect(),
        lines: order
            .into_iter()
            .map(|node| ReactionLine {
                product: write(node),
                precursors: tree.node(node).children.iter().map(|&c| write(c)).collect(),
            })
            .collect(),
    }
}

/// One reaction per line, each line terminated by a newline.
pub fn render_sequence(lines: &[ReactionLine]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Inverse of [`render_sequence`]; blank lines are skipped.
pub fn parse_sequence(text: &str) -> Result<Vec<ReactionLine>, (usize, LineError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| l.parse().map_err(|e| (n + 1, e)))
        .collect()
}

/// One line of an aligned corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub route_id: usize,
    pub target_root: usize,
    pub lines: Vec<String>,
}

/// Augments every record with `folds` roots. Each record draws from its own
/// random stream, so the output does not depend on thread scheduling.
pub fn align_dataset(
    records: &[DatasetRecord],
    folds: usize,
    seed: u64,
) -> Result<Vec<CorpusEntry>, (usize, AlignError)> {
    let per_route: Vec<Vec<CorpusEntry>> = records
        .par_iter()
        .enumerate()
        .map(|(id, rec)| {
            let tree = to_tree(&rec.route).map_err(|e| (id, e.into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64);
            let seqs = sample_roots(&tree, folds, &mut rng).map_err(|e| (id, e))?;
            Ok(seqs
                .into_iter()
                .map(|s| CorpusEntry {
                    route_id: id,
                    target_root: s.target_root,
                    lines: s.lines().iter().map(ToString::to_string).collect(),
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    Ok(per_route.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::tests::route;
    use crate::route::{Reaction, Route};
    use crate::smiles::{is_isomorphic, Molecule};

    fn mapped(target: &str, steps: &[(&str, &[&str])]) -> Route {
        route(target, steps)
    }

    #[test]
    fn single_mapped_atom_fixes_root() {
        let r = mapped("[CH3:1][CH2:2][OH:3]", &[("[CH3:1][CH2:2][OH:3]", &["[CH3:1]I", "[CH2:2]([OH:3])Br"])]);
        let t = to_tree(&r).unwrap();
        let a = align_route(&t, 0).unwrap();
        assert_eq!(a.steps.len(), 1);
        let s = &a.steps[0];
        assert_eq!(s.product_text, "CCO");
        assert_eq!(s.precursor_texts, vec!["CI", "C(O)Br"]);
        assert_eq!(s.anchor_positions, vec![Some(0), Some(1)]);
    }

    #[test]
    fn unmapped_precursor_goes_last() {
        let r = mapped("[CH3:1][CH2:2][OH:3]", &[("[CH3:1][CH2:2][OH:3]", &["O=S(=O)=O", "[CH3:1][CH2:2][O:3]C(C)=O"])]);
        let t = to_tree(&r).unwrap();
        let s = &align_route(&t, 2).unwrap().steps[0];
        assert_eq!(s.product_text, "OCC");
        assert_eq!(s.anchor_positions, vec![Some(0), None]);
        assert!(s.precursor_texts[0].starts_with("O(C"));
        assert_eq!(s.precursor_texts[1], "O=S(=O)=O");
    }

    #[test]
    fn root_out_of_range() {
        let r = mapped("CCO", &[("[CH3:1][CH2:2][OH:3]", &["[CH3:1][CH2:2]Br"])]);
        let t = to_tree(&r).unwrap();
        assert_eq!(
            align_route(&t, 3).unwrap_err(),
            AlignError::RootOutOfRange { root: 3, atoms: 3 }
        );
    }

    #[test]
    fn texts_are_isomorphic_to_the_molecules() {
        let r = mapped(
            "[CH3:1][C:2](=[O:3])[NH:4][CH2:5][CH3:6]",
            &[
                ("[CH3:1][C:2](=[O:3])[NH:4][CH2:5][CH3:6]", &["[CH3:1][C:2](=[O:3])Cl", "[NH2:4][CH2:5][CH3:6]"]),
                ("[NH2:1][CH2:2][CH3:3]", &["[N+:1](=O)([O-])[CH2:2][CH3:3]"]),
            ],
        );
        let t = to_tree(&r).unwrap();
        for r0 in 0..6 {
            let a = align_route(&t, r0).unwrap();
            assert_eq!(a.steps.len(), 2);
            for s in &a.steps {
                for (text, &node) in s.precursor_texts.iter().zip(&s.precursor_nodes) {
                    let m = Molecule::from_smiles(text).unwrap();
                    assert!(is_isomorphic(&m, t.molecule(node)));
                }
            }
            // the amine written at step 1 is the product of step 2 verbatim
            let amine = a.steps[0]
                .precursor_nodes
                .iter()
                .position(|&n| n == a.steps[1].node)
                .unwrap();
            assert_eq!(a.steps[0].precursor_texts[amine], a.steps[1].product_text);
        }
    }

    #[test]
    fn precursor_order_ignores_input_order() {
        let forward = Reaction::from_smiles("[CH3:1][O:2][CH2:3][CH3:4]", &["[CH3:1]I", "[OH:2][CH2:3][CH3:4]"]).unwrap();
        let backward = Reaction::from_smiles("[CH3:1][O:2][CH2:3][CH3:4]", &["[OH:2][CH2:3][CH3:4]", "[CH3:1]I"]).unwrap();
        let target = Molecule::from_smiles("COCC").unwrap();
        let a = Route::new(target.clone(), vec![forward]);
        let b = Route::new(target, vec![backward]);
        let (ta, tb) = (to_tree(&a).unwrap(), to_tree(&b).unwrap());
        for r0 in 0..4 {
            assert_eq!(
                align_route(&ta, r0).unwrap().lines(),
                align_route(&tb, r0).unwrap().lines()
            );
        }
    }

    #[test]
    fn augmentation_caps_and_replays() {
        let r = mapped("c1ccccc1", &[("[cH:1]1[cH:2][cH:3][cH:4][cH:5][cH:6]1", &["[CH:1]1=[CH:2][CH:3]=[CH:4][CH:5]=[CH:6]1"])]);
        let t = to_tree(&r).unwrap();
        let all = augment_roots(&t, 20, 7).unwrap();
        assert_eq!(all.len(), 6);
        let mut roots: Vec<usize> = all.iter().map(|s| s.target_root).collect();
        roots.sort();
        assert_eq!(roots, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(augment_roots(&t, 20, 7).unwrap(), all);
        assert_eq!(augment_roots(&t, 1, 7).unwrap().len(), 1);
    }

    #[test]
    fn render_and_parse_are_inverse() {
        assert_eq!(render_sequence(&[]), "");
        let lines = vec![
            ReactionLine { product: "CCO".into(), precursors: vec!["CC=O".into()] },
            ReactionLine { product: "CC=O".into(), precursors: vec!["CC(O)O".into(), "Cl".into()] },
        ];
        let text = render_sequence(&lines);
        assert_eq!(text, "CCO>>CC=O\nCC=O>>CC(O)O.Cl\n");
        assert_eq!(parse_sequence(&text).unwrap(), lines);
        assert_eq!(parse_sequence("CC\n").unwrap_err(), (1, LineError::NoArrow));
        assert_eq!(parse_sequence("C>>\n").unwrap_err(), (1, LineError::EmptyPrecursors));
    }
}
