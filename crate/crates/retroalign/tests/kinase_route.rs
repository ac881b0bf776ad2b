//! The worked nine-reaction route: a seven-step main chain with a two-step
//! branch feeding the Sonogashira coupling.

use std::path::PathBuf;

use retroalign::align::{align_route, canonical_route, AlignedSequence};
use retroalign::eval::nld_by_depth;
use retroalign::route::{ingest_dataset, to_tree, validate_route, DatasetRecord, StockSet};
use retroalign::smiles::{is_isomorphic, key_of_smiles, Molecule};
use retroalign::{route_depth, RouteTree};

fn fixture() -> DatasetRecord {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/kinase_route.json");
    ingest_dataset(path).unwrap().remove(0)
}

/// The N-methyl nitrogen carries map number 2 in the fixture.
fn methyl_nitrogen(tree: &RouteTree<'_>) -> usize {
    tree.molecule(tree.root()).map_index()[&2]
}

fn aligned(tree: &RouteTree<'_>) -> AlignedSequence {
    align_route(tree, methyl_nitrogen(tree)).unwrap()
}

#[test]
fn route_shape() {
    let rec = fixture();
    assert_eq!(rec.route.reactions().len(), 9);
    assert_eq!(route_depth(&rec.route).unwrap(), 7);
    assert_eq!(rec.ref_depth, 7);
    assert_eq!(rec.route.leaves().len(), 7);
    assert_eq!(rec.references, vec![rec.route.leaves()]);
    let stock = StockSet::from_keys(rec.route.leaves());
    assert!(validate_route(&rec.route, &stock).passed());
    let tree = to_tree(&rec.route).unwrap();
    assert!(tree.duplication_log().is_empty());
}

#[test]
fn main_chain_then_branch() {
    let rec = fixture();
    let tree = to_tree(&rec.route).unwrap();
    let seq = aligned(&tree);
    let reactions: Vec<usize> = seq
        .steps
        .iter()
        .map(|s| tree.node(s.node).reaction.unwrap())
        .collect();
    assert_eq!(reactions, (0..9).collect::<Vec<_>>());
    let depths: Vec<usize> = seq.steps.iter().map(|s| s.depth).collect();
    assert_eq!(depths, [1, 2, 3, 4, 5, 6, 7, 6, 7]);
}

#[test]
fn precursors_follow_anchor_positions() {
    let rec = fixture();
    let tree = to_tree(&rec.route).unwrap();
    for r0 in 0..tree.molecule(0).len() {
        for step in align_route(&tree, r0).unwrap().steps {
            let key = |p: &Option<usize>| (p.is_none(), *p);
            assert!(step.anchor_positions.windows(2).all(|w| key(&w[0]) <= key(&w[1])));
        }
    }
    // the unmapped reagents (borohydride, HOBt) go last
    let seq = aligned(&tree);
    assert_eq!(seq.steps[0].anchor_positions[1], None);
    assert_eq!(seq.steps[2].anchor_positions[1], None);
    // the chloropyrimidine scaffold anchors before the alkyne ester
    assert!(seq.steps[4].precursor_texts[1].starts_with("C#C"));
}

#[test]
fn boc_piperidine_nitrogen_leads_the_main_chain() {
    let rec = fixture();
    let tree = to_tree(&rec.route).unwrap();
    let seq = aligned(&tree);
    assert!(seq.steps[0].product_text.starts_with("N1(C)"));
    for step in &seq.steps[1..6] {
        assert!(step.precursor_texts[0].starts_with("N1("), "{}", step.precursor_texts[0]);
    }
    let boc_aniline = Molecule::from_smiles("N1(C(=O)OC(C)(C)C)CCC(c2ccc(N)cc2)CC1").unwrap();
    let written = Molecule::from_smiles(&seq.steps[6].product_text).unwrap();
    assert!(is_isomorphic(&boc_aniline, &written));
}

#[test]
fn consecutive_steps_share_text() {
    let rec = fixture();
    let tree = to_tree(&rec.route).unwrap();
    let seq = aligned(&tree);
    for next in &seq.steps[1..] {
        let parent = tree.node(next.node).parent.unwrap();
        let step = seq.steps.iter().find(|s| s.node == parent).unwrap();
        let i = step.precursor_nodes.iter().position(|&n| n == next.node).unwrap();
        assert_eq!(step.precursor_texts[i], next.product_text);
        assert_eq!(step.inherited_roots[i], next.product_root);
    }
}

#[test]
fn rendering_preserves_chemistry() {
    let rec = fixture();
    let tree = to_tree(&rec.route).unwrap();
    let seq = aligned(&tree);
    for step in &seq.steps {
        let product = Molecule::from_smiles(&step.product_text).unwrap();
        assert!(is_isomorphic(&product, tree.molecule(step.node)));
        for (text, &node) in step.precursor_texts.iter().zip(&step.precursor_nodes) {
            let m = Molecule::from_smiles(text).unwrap();
            assert!(is_isomorphic(&m, tree.molecule(node)));
        }
    }
    let leaves: std::collections::BTreeSet<_> = seq
        .steps
        .iter()
        .flat_map(|s| s.precursor_nodes.iter().zip(&s.precursor_texts))
        .filter(|(n, _)| tree.node(**n).is_leaf())
        .map(|(_, t)| key_of_smiles(t).unwrap())
        .collect();
    assert_eq!(leaves, rec.route.leaves());
}

#[test]
fn drift_profiles_cover_every_depth() {
    let rec = fixture();
    let tree = to_tree(&rec.route).unwrap();
    let a = nld_by_depth(&aligned(&tree).rendered());
    let c = nld_by_depth(&canonical_route(&tree));
    let depths: Vec<usize> = a.iter().map(|d| d.0).collect();
    assert_eq!(depths, (1..=7).collect::<Vec<_>>());
    assert_eq!(c.len(), 7);
    // the aligned text drifts less over the route as a whole
    let total = |p: &[(usize, usize, f64)]| p.iter().map(|d| d.2).sum::<f64>();
    assert!(total(&a) < total(&c));
}
