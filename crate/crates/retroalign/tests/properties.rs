use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use retroalign::align::{align_route, augment_roots, parse_sequence, render_sequence};
use retroalign::consensus::{build_ranking_pairs, margin_rank_loss, vote, NotationOutcome, SlateEntry};
use retroalign::eval::{levenshtein, nld, topk_accuracy, Candidate, EvalRecord};
use retroalign::reward::{
    jaccard, parse_plan, reward_terms, score_plan, Delimiters, Jaccard, RewardConfig,
};
use retroalign::route::{to_tree, DatasetRecord};
use retroalign::smiles::{canonical_key, canonical_ranks, key_of_smiles, write_rooted};
use retroalign::{is_isomorphic, route_depth, CandidateSlate, CanonicalKey, Molecule};
use retroalign_testkit::{oracle, random_dag, random_molecule, random_record};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #[test]
    fn every_root_round_trips(seed: u64, size in 1usize..40) {
        let m = random_molecule(&mut rng(seed), size);
        let key = canonical_key(&m);
        for root in 0..m.len() {
            let w = write_rooted(&m, root).unwrap();
            prop_assert_eq!(w.atom_order[0], root);
            let back = Molecule::from_smiles(&w.text).unwrap();
            prop_assert!(is_isomorphic(&back, &m), "{}", w.text);
            prop_assert_eq!(canonical_key(&back), key.clone());
        }
    }

    #[test]
    fn ranks_are_a_permutation(seed: u64, size in 1usize..40) {
        let m = random_molecule(&mut rng(seed), size);
        let mut ranks = canonical_ranks(&m);
        ranks.sort();
        prop_assert_eq!(ranks, (0..m.len()).collect::<Vec<_>>());
    }

    #[test]
    fn keys_agree_with_isomorphism(seed: u64) {
        let mut r = rng(seed);
        let (na, nb) = (r.gen_range(2..12), r.gen_range(2..12));
        let a = random_molecule(&mut r, na);
        let b = random_molecule(&mut r, nb);
        prop_assert_eq!(canonical_key(&a) == canonical_key(&b), is_isomorphic(&a, &b));
    }

    #[test]
    fn depth_matches_path_enumeration(seed: u64) {
        let route = random_dag(&mut rng(seed), 12);
        prop_assert_eq!(route_depth(&route).unwrap(), oracle::depth(&route));
    }

    #[test]
    fn levenshtein_matches_table(a in "[CNOc1()=#]{0,30}", b in "[CNOc1()=#]{0,30}") {
        prop_assert_eq!(levenshtein(&a, &b), oracle::levenshtein(&a, &b));
        let d = nld(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, nld(&b, &a));
        prop_assert_eq!(nld(&a, &a), 0.0);
    }

    #[test]
    fn jaccard_matches_list_arithmetic(
        a in proptest::collection::btree_set(0u8..12, 0..8),
        b in proptest::collection::btree_set(0u8..12, 0..8),
    ) {
        let j = jaccard(&a, &b);
        let la: Vec<u8> = a.iter().copied().collect();
        let lb: Vec<u8> = b.iter().copied().collect();
        let (s, u) = oracle::jaccard(&la, &lb);
        prop_assert_eq!((j.shared, j.union), (s, u));
    }
}

fn exact() -> Jaccard {
    Jaccard { shared: 1, union: 1 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn reward_is_monotone_and_capped(
        shared in 0usize..20,
        extra in 1usize..20,
        bump in 1usize..5,
        c_inv in 0usize..10,
        excess in 0usize..8,
    ) {
        let cfg = RewardConfig::default();
        let r = |j, c, e| reward_terms(&cfg, j, c, e, true).2;
        let lower = Jaccard { shared, union: shared + extra };
        let higher = Jaccard { shared: shared + bump.min(extra), union: shared + extra };
        prop_assert!(r(lower, c_inv, excess) <= r(higher, c_inv, excess));
        prop_assert!(r(exact(), c_inv + 1, excess) <= r(exact(), c_inv, excess));
        prop_assert!(r(exact(), c_inv, excess + 1) <= r(exact(), c_inv, excess));
        prop_assert_eq!(r(exact(), 4 + c_inv, excess), r(exact(), 4, excess));
        prop_assert_eq!(r(exact(), c_inv, 3 + excess), r(exact(), c_inv, 3));
        // a worst-case exact match never loses to any near miss
        prop_assert!(r(exact(), c_inv, excess) >= r(lower, 0, 0));
        let total = r(lower, c_inv, excess);
        prop_assert!((0.5..=2.0).contains(&total));
    }
}

const POOL: [&str; 8] = ["CC", "CO", "CN", "CCl", "CBr", "CI", "c1ccccc1", "CC#N"];

fn pool_set(picks: &BTreeSet<usize>) -> BTreeSet<CanonicalKey> {
    picks.iter().map(|&i| key_of_smiles(POOL[i]).unwrap()).collect()
}

proptest! {
    #[test]
    fn best_reference_wins(
        plan in proptest::collection::btree_set(0usize..8, 1..5),
        refs in proptest::collection::vec(proptest::collection::btree_set(0usize..8, 1..5), 1..4),
    ) {
        // one reaction from an arbitrary target straight to the pooled set
        let text = format!(
            "<think></think>\nCCCCCCCCCC>>{}",
            plan.iter().map(|&i| POOL[i]).collect::<Vec<_>>().join(".")
        );
        let target = Molecule::from_smiles("CCCCCCCCCC").unwrap();
        let p = parse_plan(&text, &target, &Delimiters::default());
        prop_assert!(p.is_parsable());
        let cfg = RewardConfig::default();
        let refs: Vec<_> = refs.iter().map(pool_set).collect();
        let all = score_plan(&p, &refs, 1, &cfg).unwrap();
        let best = refs
            .iter()
            .map(|r| score_plan(&p, std::slice::from_ref(r), 1, &cfg).unwrap().total)
            .fold(f64::MIN, f64::max);
        prop_assert_eq!(all.total, best);
        prop_assert!(all.total >= 0.5);
    }

    #[test]
    fn unparsable_means_zero(text in "[A-Za-z >.]{0,40}") {
        let target = Molecule::from_smiles("CCO").unwrap();
        let p = parse_plan(&text, &target, &Delimiters::default());
        let refs = vec![pool_set(&BTreeSet::from([0]))];
        let s = score_plan(&p, &refs, 1, &RewardConfig::default()).unwrap();
        prop_assert_eq!(s.total == 0.0, !p.is_parsable());
    }
}

fn random_eval(r: &mut ChaCha8Rng) -> EvalRecord {
    let set = |r: &mut ChaCha8Rng| pool_set(&(0..r.gen_range(1..4)).map(|_| r.gen_range(0..8)).collect());
    let reference = set(r);
    let ref_depth = r.gen_range(1..7);
    EvalRecord {
        target: key_of_smiles("CCCC").unwrap(),
        references: vec![reference.clone()],
        ref_depth,
        candidates: (0..r.gen_range(0..6))
            .map(|_| Candidate {
                precursors: if r.gen_bool(0.3) { reference.clone() } else { set(r) },
                depth: r.gen_range(1..8),
                plan_id: None,
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn topk_is_monotone_and_order_free(seed: u64, n in 0usize..40) {
        let mut r = rng(seed);
        let mut records: Vec<EvalRecord> = (0..n).map(|_| random_eval(&mut r)).collect();
        let report = topk_accuracy(&records, 5);
        prop_assert!(report.top_k.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(report.top_k.iter().all(|a| (0.0..=1.0).contains(a)));
        records.shuffle(&mut r);
        prop_assert_eq!(topk_accuracy(&records, 5), report);
    }

    #[test]
    fn planted_ranks_are_recovered(ranks in proptest::collection::vec(proptest::option::of(1usize..6), 1..50)) {
        let good = pool_set(&BTreeSet::from([0, 1]));
        let bad = pool_set(&BTreeSet::from([2]));
        let records: Vec<EvalRecord> = ranks
            .iter()
            .map(|hit| EvalRecord {
                target: key_of_smiles("CCCC").unwrap(),
                references: vec![good.clone()],
                ref_depth: 2,
                candidates: (1..=5)
                    .map(|k| Candidate {
                        precursors: if Some(k) == *hit { good.clone() } else { bad.clone() },
                        depth: 2,
                        plan_id: None,
                    })
                    .collect(),
            })
            .collect();
        let report = topk_accuracy(&records, 5);
        for k in 1..=5 {
            let planted = ranks.iter().filter(|h| h.is_some_and(|h| h <= k)).count();
            prop_assert_eq!(report.hits[k - 1], planted);
        }
    }

    #[test]
    fn vote_finds_the_mode(picks in proptest::collection::vec(0usize..4, 1..16)) {
        let sets: Vec<BTreeSet<CanonicalKey>> = picks.iter().map(|&p| pool_set(&BTreeSet::from([p]))).collect();
        let slate = CandidateSlate {
            target: key_of_smiles("CCCC").unwrap(),
            entries: sets
                .iter()
                .enumerate()
                .map(|(i, s)| SlateEntry { plan_id: i.to_string(), precursors: s.clone(), depth: 1, notation_id: i })
                .collect(),
        };
        let ranked = vote(&slate);
        let (first, count) = oracle::mode(&sets).unwrap();
        prop_assert_eq!(ranked[0].first_index, first);
        prop_assert_eq!(ranked[0].score, count);
        prop_assert_eq!(ranked.iter().map(|r| r.score).sum::<usize>(), picks.len());
        let distinct: BTreeSet<_> = sets.iter().collect();
        prop_assert_eq!(ranked.len(), distinct.len());
    }

    #[test]
    fn margin_loss_is_a_hinge(pos in -10.0f64..10.0, neg in -10.0f64..10.0, margin in 0.0f64..3.0) {
        let l = margin_rank_loss(pos, neg, margin);
        prop_assert!(l >= 0.0);
        prop_assert_eq!(l == 0.0, pos - neg >= margin);
    }

    #[test]
    fn pairs_match_grouping(outcomes in proptest::collection::vec((0usize..5, 0usize..3, any::<bool>()), 0..20)) {
        let outcomes: Vec<(String, String, bool)> = outcomes
            .into_iter()
            .map(|(n, t, s)| (format!("{}{}", "C".repeat(n + 1), "O"), format!("T{t}"), s))
            .collect();
        let input: Vec<NotationOutcome> = outcomes
            .iter()
            .map(|(n, t, s)| NotationOutcome { notation: n.clone(), target: t.clone(), success: *s })
            .collect();
        let got: Vec<(String, String)> = build_ranking_pairs(&input)
            .into_iter()
            .map(|p| (p.positive, p.negative))
            .collect();
        prop_assert_eq!(got, oracle::ranking_pairs(&outcomes));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alignment_invariants(seed: u64) {
        let mut r = rng(seed);
        let raw = random_record(&mut r);
        let rec = DatasetRecord::from_json(raw, 0).unwrap();
        let tree = to_tree(&rec.route).unwrap();
        let r0 = r.gen_range(0..rec.route.target().len());
        let seq = align_route(&tree, r0).unwrap();
        prop_assert_eq!(seq.steps.len(), tree.nodes().iter().filter(|n| !n.is_leaf()).count());
        for step in &seq.steps {
            let key = |p: &Option<usize>| (p.is_none(), *p);
            prop_assert!(step.anchor_positions.windows(2).all(|w| key(&w[0]) <= key(&w[1])));
            for (text, &node) in step.precursor_texts.iter().zip(&step.precursor_nodes) {
                let m = Molecule::from_smiles(text).unwrap();
                prop_assert!(is_isomorphic(&m, tree.molecule(node)));
                if !tree.node(node).is_leaf() {
                    let next = seq.steps.iter().find(|s| s.node == node).unwrap();
                    prop_assert_eq!(&next.product_text, text);
                }
            }
        }
        let text = render_sequence(&seq.lines());
        prop_assert_eq!(parse_sequence(&text).unwrap(), seq.lines());

        // reversing every precursor list does not change the output
        let mut flipped = rec.raw().clone();
        for rx in &mut flipped.reactions {
            rx.precursors.reverse();
        }
        let flipped = DatasetRecord::from_json(flipped, 0).unwrap();
        let flipped_tree = to_tree(&flipped.route).unwrap();
        prop_assert_eq!(align_route(&flipped_tree, r0).unwrap().lines(), seq.lines());
    }

    #[test]
    fn augmentation_is_seeded_and_distinct(seed: u64, folds in 1usize..30) {
        let raw = random_record(&mut rng(seed));
        let rec = DatasetRecord::from_json(raw, 0).unwrap();
        let tree = to_tree(&rec.route).unwrap();
        let a = augment_roots(&tree, folds, seed).unwrap();
        prop_assert_eq!(a.len(), folds.min(rec.route.target().len()));
        let roots: BTreeSet<usize> = a.iter().map(|s| s.target_root).collect();
        prop_assert_eq!(roots.len(), a.len());
        prop_assert_eq!(augment_roots(&tree, folds, seed).unwrap(), a);
    }
}
