//! Decoupling a route DAG into a tree and linearizing it.

use std::collections::VecDeque;

use super::{Reaction, Route, RouteError};
use crate::smiles::{CanonicalKey, Molecule};

pub type NodeId = usize;

/// Where a tree node's molecule instance lives in the route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Target,
    Precursor { reaction: usize, index: usize },
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub key: CanonicalKey,
    pub parent: Option<NodeId>,
    /// Route reaction that produces this molecule; `None` for leaves.
    pub reaction: Option<usize>,
    pub children: Vec<NodeId>,
    /// Reactions between this node and the root.
    pub depth: usize,
    source: Source,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.reaction.is_none()
    }
}

/// A copy made while decoupling a convergent molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Duplication {
    pub node: NodeId,
    pub key: CanonicalKey,
    pub depth: usize,
}

/// Route as a tree rooted at the target: every occurrence of a shared
/// intermediate gets its own node.
#[derive(Debug, Clone)]
pub struct RouteTree<'r> {
    route: &'r Route,
    nodes: Vec<TreeNode>,
    duplication_log: Vec<Duplication>,
}

impl<'r> RouteTree<'r> {
    pub fn route(&self) -> &'r Route {
        self.route
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    /// Molecules copied during decoupling, ordered by key then depth.
    pub fn duplication_log(&self) -> &[Duplication] {
        &self.duplication_log
    }

    /// The molecule instance behind a node. For the root this is the route
    /// target; otherwise the precursor as written in its parent reaction.
    pub fn molecule(&self, id: NodeId) -> &'r Molecule {
        match self.nodes[id].source {
            Source::Target => self.route.target(),
            Source::Precursor { reaction, index } => {
                &self.route.reactions()[reaction].precursors()[index]
            }
        }
    }

    pub fn reaction(&self, id: NodeId) -> Option<&'r Reaction> {
        self.nodes[id].reaction.map(|r| &self.route.reactions()[r])
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }
}

pub fn to_tree(route: &Route) -> Result<RouteTree<'_>, RouteError> {
    let mut tree = RouteTree {
        route,
        nodes: Vec::new(),
        duplication_log: Vec::new(),
    };
    let mut seen = std::collections::HashSet::new();
    let mut path = Vec::new();
    build(
        &mut tree,
        route.target_key().clone(),
        Source::Target,
        None,
        0,
        &mut seen,
        &mut path,
    )?;
    tree.duplication_log
        .sort_by(|a, b| (&a.key, a.depth, a.node).cmp(&(&b.key, b.depth, b.node)));
    Ok(tree)
}

fn build(
    tree: &mut RouteTree<'_>,
    key: CanonicalKey,
    source: Source,
    parent: Option<NodeId>,
    depth: usize,
    seen: &mut std::collections::HashSet<CanonicalKey>,
    path: &mut Vec<CanonicalKey>,
) -> Result<NodeId, RouteError> {
    if path.contains(&key) {
        return Err(RouteError::Cycle(key));
    }
    let id = tree.nodes.len();
    let reaction = tree.route.producer_of(&key);
    if !seen.insert(key.clone()) {
        tree.duplication_log.push(Duplication {
            node: id,
            key: key.clone(),
            depth,
        });
    }
    tree.nodes.push(TreeNode {
        key: key.clone(),
        parent,
        reaction,
        children: Vec::new(),
        depth,
        source,
    });
    if let Some(r) = reaction {
        path.push(key);
        let keys = tree.route.reactions()[r].precursor_keys().to_vec();
        for (index, child_key) in keys.into_iter().enumerate() {
            let child = build(
                tree,
                child_key,
                Source::Precursor { reaction: r, index },
                Some(id),
                depth + 1,
                seen,
                path,
            )?;
            tree.nodes[id].children.push(child);
        }
        path.pop();
    }
    Ok(id)
}

/// Main-chain-first depth-first order of the tree's reactions, returned as
/// the product node of each step.
///
/// From a starting node the walk keeps following the first non-leaf child;
/// the other non-leaf children queue up as branches, each expanded the same
/// way once the current chain reaches a leaf.
pub fn linearize(tree: &RouteTree<'_>) -> Vec<NodeId> {
    walk_main_chain_first(tree.root(), |node| tree.node(node).children.clone(), |n| {
        tree.node(n).is_leaf()
    })
}

pub(crate) fn walk_main_chain_first(
    root: NodeId,
    mut children: impl FnMut(NodeId) -> Vec<NodeId>,
    is_leaf: impl Fn(NodeId) -> bool,
) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut branches = VecDeque::from([root]);
    while let Some(mut node) = branches.pop_front() {
        while !is_leaf(node) {
            out.push(node);
            let mut open = children(node).into_iter().filter(|&c| !is_leaf(c));
            match open.next() {
                Some(next) => {
                    branches.extend(open);
                    node = next;
                }
                None => break,
            }
        }
    }
    out
}
