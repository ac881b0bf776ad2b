//! Exact graph matching in the VF2 style: atoms of the first graph are
//! matched in breadth-first order, each candidate must agree on the atom
//! label and degree and be consistent with every already-matched neighbor.

use super::Molecule;

type Label = (u8, i8, u16, bool, u8);

fn label(m: &Molecule, i: usize) -> Label {
    let a = m.atom(i);
    (
        a.element.atomic_number(),
        a.charge,
        a.isotope.unwrap_or(0),
        a.aromatic,
        m.total_hydrogens(i),
    )
}

/// Compares element, charge, isotope, aromaticity, hydrogen count and bond
/// order. Atom-map numbers and stereo markers are ignored.
pub fn is_isomorphic(a: &Molecule, b: &Molecule) -> bool {
    find_isomorphism(a, b).is_some()
}

/// Returns `mapping` with `mapping[i]` the atom of `b` matched to atom `i`
/// of `a`.
pub fn find_isomorphism(a: &Molecule, b: &Molecule) -> Option<Vec<usize>> {
    let n = a.len();
    if n != b.len() || a.bonds().len() != b.bonds().len() {
        return None;
    }
    let labels_a: Vec<Label> = (0..n).map(|i| label(a, i)).collect();
    let labels_b: Vec<Label> = (0..n).map(|i| label(b, i)).collect();
    let mut sig_a: Vec<(Label, usize)> = (0..n).map(|i| (labels_a[i], a.degree(i))).collect();
    let mut sig_b: Vec<(Label, usize)> = (0..n).map(|i| (labels_b[i], b.degree(i))).collect();
    sig_a.sort_unstable();
    sig_b.sort_unstable();
    if sig_a != sig_b {
        return None;
    }
    let mut bonds_a: Vec<u8> = a.bonds().iter().map(|x| x.order.code()).collect();
    let mut bonds_b: Vec<u8> = b.bonds().iter().map(|x| x.order.code()).collect();
    bonds_a.sort_unstable();
    bonds_b.sort_unstable();
    if bonds_a != bonds_b {
        return None;
    }

    // rarest signature first, then breadth-first so every later atom has a
    // matched parent that restricts its candidates
    let frequency = |s: &(Label, usize)| sig_a.iter().filter(|t| *t == s).count();
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![None; n];
    let mut placed = vec![false; n];
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !placed[i])
            .min_by_key(|&i| (frequency(&(labels_a[i], a.degree(i))), i))
            .unwrap();
        placed[start] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &(v, _) in a.neighbors(u) {
                if !placed[v] {
                    placed[v] = true;
                    parent[v] = Some(u);
                    order.push(v);
                }
            }
        }
    }

    let mut state = Matcher {
        a,
        b,
        labels_a: &labels_a,
        labels_b: &labels_b,
        order: &order,
        parent: &parent,
        core_a: vec![usize::MAX; n],
        core_b: vec![usize::MAX; n],
    };
    state.search(0).then_some(state.core_a)
}

struct Matcher<'x> {
    a: &'x Molecule,
    b: &'x Molecule,
    labels_a: &'x [Label],
    labels_b: &'x [Label],
    order: &'x [usize],
    parent: &'x [Option<usize>],
    core_a: Vec<usize>,
    core_b: Vec<usize>,
}

impl Matcher<'_> {
    fn search(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let u = self.order[depth];
        let candidates: Vec<usize> = match self.parent[u] {
            Some(p) => self
                .b
                .neighbors(self.core_a[p])
                .iter()
                .map(|&(v, _)| v)
                .filter(|&v| self.core_b[v] == usize::MAX)
                .collect(),
            None => (0..self.b.len())
                .filter(|&v| self.core_b[v] == usize::MAX)
                .collect(),
        };
        for v in candidates {
            if self.feasible(u, v) {
                self.core_a[u] = v;
                self.core_b[v] = u;
                if self.search(depth + 1) {
                    return true;
                }
                self.core_a[u] = usize::MAX;
                self.core_b[v] = usize::MAX;
            }
        }
        false
    }

    fn feasible(&self, u: usize, v: usize) -> bool {
        if self.labels_a[u] != self.labels_b[v] || self.a.degree(u) != self.b.degree(v) {
            return false;
        }
        let mut matched_a = 0;
        for &(nu, bu) in self.a.neighbors(u) {
            let image = self.core_a[nu];
            if image == usize::MAX {
                continue;
            }
            matched_a += 1;
            match self.b.bond_between(v, image) {
                Some(bond) if bond.order == self.a.bonds()[bu].order => {}
                _ => return false,
            }
        }
        let matched_b = self
            .b
            .neighbors(v)
            .iter()
            .filter(|&&(nv, _)| self.core_b[nv] != usize::MAX)
            .count();
        matched_a == matched_b
    }
}
