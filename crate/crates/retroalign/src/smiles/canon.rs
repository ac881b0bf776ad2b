//! Morgan-style canonical atom ranking.
//!
//! Atoms start in classes keyed by element, charge, isotope, aromaticity,
//! degree and hydrogen count. Classes are refined by the sorted multiset of
//! `(neighbor class, bond order)` until the partition stops splitting. Any
//! remaining tie is broken by individualizing the lowest-index atom of the
//! first tied class and refining again, until every atom has its own rank.

use super::Molecule;

pub fn canonical_ranks(m: &Molecule) -> Vec<usize> {
    let n = m.len();
    if n == 0 {
        return Vec::new();
    }
    let seeds: Vec<_> = (0..n)
        .map(|i| {
            let a = m.atom(i);
            (
                a.element.atomic_number(),
                a.charge,
                a.isotope.unwrap_or(0),
                a.aromatic,
                m.degree(i),
                m.total_hydrogens(i),
            )
        })
        .collect();
    let mut ranks = dense_ranks(&seeds);
    let mut classes = refine(m, &mut ranks);

    while classes < n {
        let tied = first_tied_class(&ranks);
        let chosen = (0..n).find(|&i| ranks[i] == tied).unwrap();
        let keys: Vec<(usize, bool)> = (0..n).map(|i| (ranks[i], i != chosen)).collect();
        ranks = dense_ranks(&keys);
        classes = refine(m, &mut ranks);
    }
    ranks
}

/// Refines `ranks` in place to a fixpoint and returns the class count.
fn refine(m: &Molecule, ranks: &mut Vec<usize>) -> usize {
    let mut classes = class_count(ranks);
    loop {
        let signatures: Vec<(usize, Vec<(usize, u8)>)> = (0..m.len())
            .map(|i| {
                let mut around: Vec<(usize, u8)> = m
                    .neighbors(i)
                    .iter()
                    .map(|&(nb, b)| (ranks[nb], m.bonds()[b].order.code()))
                    .collect();
                around.sort_unstable();
                (ranks[i], around)
            })
            .collect();
        let next = dense_ranks(&signatures);
        let next_classes = class_count(&next);
        *ranks = next;
        if next_classes == classes {
            return classes;
        }
        classes = next_classes;
    }
}

fn first_tied_class(ranks: &[usize]) -> usize {
    let mut counts = vec![0usize; ranks.len()];
    for &r in ranks {
        counts[r] += 1;
    }
    counts.iter().position(|&c| c > 1).unwrap()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |&m| m + 1)
}

/// Dense ranks of `keys`: equal keys share a rank, ranks follow key order.
/// Ties beyond the key are represented by the shared rank, so a class of `k`
/// tied atoms at rank `r` is followed by rank `r + 1` rather than `r + k`;
/// after full individualization the result is a permutation of `0..n`.
fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut current = 0;
    for w in 0..order.len() {
        if w > 0 && keys[order[w]] != keys[order[w - 1]] {
            current += 1;
        }
        ranks[order[w]] = current;
    }
    ranks
}
