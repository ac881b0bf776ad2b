//! Synthetic molecules, routes and datasets for tests and benchmarks.
//!
//! Everything is driven by a caller-supplied RNG, so a seed reproduces the
//! same data. Molecules are valence-correct but make no claim to being
//! sensible chemistry.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use retroalign::route::{DatasetRecord, ReactionJson, RecordJson};
use retroalign::smiles::{
    canonical_key, Atom, Bond, BondOrder, CanonicalKey, Element, Molecule, SmilesWriter,
    WriteOptions,
};
use retroalign::{route_depth, Reaction, Route};

/// A molecular graph under construction.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

impl Graph {
    pub fn molecule(&self) -> Molecule {
        Molecule::from_parts(self.atoms.clone(), self.bonds.clone(), "").expect("generated graph")
    }

    fn add(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.atoms.len() - 1
    }

    fn bond(&mut self, a: usize, b: usize, order: BondOrder) {
        self.bonds.push(Bond::new(a, b, order));
    }

    /// Atoms still able to take a single bond in place of a hydrogen.
    fn open_sites(&self) -> Vec<usize> {
        let m = self.molecule();
        (0..self.atoms.len())
            .filter(|&i| self.atoms[i].explicit_hydrogens.is_none() && m.implied_hydrogens(i) > 0)
            .collect()
    }

    fn strip_maps(&mut self) {
        for a in &mut self.atoms {
            a.map_number = None;
        }
    }

    /// Same molecule with atoms listed in random order and no maps.
    fn shuffled<R: Rng>(&self, rng: &mut R) -> Graph {
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        order.shuffle(rng);
        let mut new_index = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| Bond::new(new_index[b.begin], new_index[b.end], b.order))
            .collect();
        bonds.shuffle(rng);
        let mut g = Graph {
            atoms: order.iter().map(|&o| self.atoms[o].clone()).collect(),
            bonds,
        };
        g.strip_maps();
        g
    }

    /// Atom sets on either side of `bond` if it is not in a ring.
    fn split_at(&self, bond: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            if i != bond {
                adj[b.begin].push(b.end);
                adj[b.end].push(b.begin);
            }
        }
        let start = self.bonds[bond].begin;
        let mut side = vec![false; self.atoms.len()];
        let mut stack = vec![start];
        side[start] = true;
        while let Some(a) = stack.pop() {
            for &n in &adj[a] {
                if !side[n] {
                    side[n] = true;
                    stack.push(n);
                }
            }
        }
        if side[self.bonds[bond].end] {
            return None;
        }
        let (a, b) = (0..self.atoms.len()).partition(|&i| side[i]);
        Some((a, b))
    }

    /// The subgraph on `atoms`, keeping their order.
    fn subgraph(&self, atoms: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in atoms.iter().enumerate() {
            index[old] = new;
        }
        Graph {
            atoms: atoms.iter().map(|&a| self.atoms[a].clone()).collect(),
            bonds: self
                .bonds
                .iter()
                .filter(|b| index[b.begin] != usize::MAX && index[b.end] != usize::MAX)
                .map(|b| Bond::new(index[b.begin], index[b.end], b.order))
                .collect(),
        }
    }
}

fn bracket(element: Element, hydrogens: u8, charge: i8) -> Atom {
    Atom {
        explicit_hydrogens: Some(hydrogens),
        charge,
        ..Atom::new(element)
    }
}

/// Adds one building block, bonded to `site` if given.
fn add_unit<R: Rng>(g: &mut Graph, rng: &mut R, site: Option<usize>) {
    let attach = |g: &mut Graph, a: usize| {
        if let Some(s) = site {
            g.bond(s, a, BondOrder::Single);
        }
    };
    let choice = if site.is_none() { rng.gen_range(0..7) } else { rng.gen_range(0..16) };
    match choice {
        0 | 7 | 8 => {
            let c = g.add(Atom::new(Element::C));
            attach(g, c);
        }
        1 => {
            // benzene or pyridine
            let pyridine = rng.gen_bool(0.3);
            let ring: Vec<usize> = (0..6)
                .map(|i| {
                    let e = if pyridine && i == 3 { Element::N } else { Element::C };
                    g.add(Atom::aromatic(e))
                })
                .collect();
            for i in 0..6 {
                g.bond(ring[i], ring[(i + 1) % 6], BondOrder::Aromatic);
            }
            attach(g, ring[0]);
        }
        2 => {
            let ring: Vec<usize> = (0..rng.gen_range(5..=6)).map(|_| g.add(Atom::new(Element::C))).collect();
            for i in 0..ring.len() {
                g.bond(ring[i], ring[(i + 1) % ring.len()], BondOrder::Single);
            }
            attach(g, ring[0]);
        }
        3 => {
            // pyrrole
            let n = g.add(bracket(Element::N, 1, 0));
            g.atoms[n].aromatic = true;
            let ring: Vec<usize> = std::iter::once(n)
                .chain((0..4).map(|_| g.add(Atom::aromatic(Element::C))))
                .collect();
            for i in 0..5 {
                g.bond(ring[i], ring[(i + 1) % 5], BondOrder::Aromatic);
            }
            attach(g, ring[2]);
        }
        4 | 9 => {
            let c = g.add(Atom::new(Element::C));
            let o = g.add(Atom::new(Element::O));
            g.bond(c, o, BondOrder::Double);
            attach(g, c);
        }
        5 | 10 => {
            let n = g.add(Atom::new(Element::N));
            attach(g, n);
        }
        6 | 11 => {
            let o = g.add(Atom::new(Element::O));
            attach(g, o);
        }
        12 => {
            let e = *[Element::F, Element::CL, Element::BR, Element::I].choose(rng).unwrap();
            let x = g.add(Atom::new(e));
            attach(g, x);
        }
        13 => {
            let a = g.add(Atom::new(Element::C));
            let b = g.add(Atom::new(Element::C));
            g.bond(a, b, BondOrder::Triple);
            attach(g, a);
        }
        14 => {
            // nitro
            let n = g.add(bracket(Element::N, 0, 1));
            let o1 = g.add(Atom::new(Element::O));
            let o2 = g.add(bracket(Element::O, 0, -1));
            g.bond(n, o1, BondOrder::Double);
            g.bond(n, o2, BondOrder::Single);
            attach(g, n);
        }
        _ => {
            let c = g.add(Atom {
                isotope: Some(13),
                ..bracket(Element::C, 3, 0)
            });
            attach(g, c);
        }
    }
}

/// A connected, valence-correct molecule of roughly `size` heavy atoms.
pub fn random_graph<R: Rng>(rng: &mut R, size: usize) -> Graph {
    let mut g = Graph::default();
    add_unit(&mut g, rng, None);
    while g.atoms.len() < size {
        let sites = g.open_sites();
        let Some(&site) = sites.choose(rng) else { break };
        add_unit(&mut g, rng, Some(site));
    }
    // an occasional extra double bond between two saturated carbons
    if rng.gen_bool(0.3) {
        let m = g.molecule();
        let candidates: Vec<usize> = (0..g.bonds.len())
            .filter(|&i| {
                let b = &g.bonds[i];
                b.order == BondOrder::Single
                    && [b.begin, b.end].iter().all(|&a| {
                        let atom = &g.atoms[a];
                        atom.element == Element::C
                            && !atom.aromatic
                            && atom.explicit_hydrogens.is_none()
                            && m.implied_hydrogens(a) > 0
                    })
            })
            .collect();
        if let Some(&i) = candidates.choose(rng) {
            g.bonds[i].order = BondOrder::Double;
        }
    }
    debug_assert!(g.molecule().has_valid_valences());
    g
}

pub fn random_molecule<R: Rng>(rng: &mut R, size: usize) -> Molecule {
    random_graph(rng, size).molecule()
}

/// SMILES of a random molecule, written from a random root.
pub fn random_smiles<R: Rng>(rng: &mut R, size: usize) -> String {
    let m = random_molecule(rng, size);
    let root = rng.gen_range(0..m.len());
    write(&m, root, false)
}

fn write(m: &Molecule, root: usize, maps: bool) -> String {
    let opts = if maps { WriteOptions::default() } else { WriteOptions::plain() };
    SmilesWriter::new(m).try_rooted_with(root, &opts).unwrap().text
}

fn write_random<R: Rng>(rng: &mut R, g: &Graph, maps: bool) -> String {
    let m = g.molecule();
    let root = rng.gen_range(0..m.len());
    write(&m, root, maps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    InProgress,
    Done,
}

const REAGENTS: [&str; 4] = ["O", "CC(=O)O", "ClCCl", "CN(C)C=O"];

struct RouteBuilder<'r, R> {
    rng: &'r mut R,
    reactions: Vec<ReactionJson>,
    seen: HashMap<CanonicalKey, State>,
}

impl<R: Rng> RouteBuilder<'_, R> {
    /// Decomposes `g` (no maps) unless the budget or the molecule runs out.
    fn expand(&mut self, g: &Graph, budget: usize) {
        let key = canonical_key(&g.molecule());
        if self.seen.contains_key(&key) {
            return;
        }
        if budget == 0 || g.atoms.len() < 5 {
            self.seen.insert(key, State::Done);
            return;
        }
        self.seen.insert(key.clone(), State::InProgress);

        let mut product = g.shuffled(self.rng);
        for (i, a) in product.atoms.iter_mut().enumerate() {
            a.map_number = Some(i as u32 + 1);
        }
        let mut steps = [0u8, 0, 0, 1, 2];
        steps.shuffle(self.rng);
        let precursors = steps
            .iter()
            .find_map(|&s| match s {
                0 => self.cut(&product),
                1 => self.protect(&product),
                _ => self.unsaturate(&product),
            });
        let Some(mut precursors) = precursors else {
            self.seen.insert(key, State::Done);
            return;
        };
        // the largest fragment carries the remaining budget
        precursors.sort_by_key(|p| std::cmp::Reverse(p.atoms.len()));
        let mut texts: Vec<String> = precursors.iter().map(|p| write_random(self.rng, p, true)).collect();
        if self.rng.gen_bool(0.2) {
            // reagents are smaller than anything expanded, so never close a cycle
            let reagent = *REAGENTS.choose(self.rng).unwrap();
            let key = retroalign::smiles::key_of_smiles(reagent).unwrap();
            self.seen.entry(key).or_insert(State::Done);
            texts.push(reagent.to_string());
        }
        texts.shuffle(self.rng);
        self.reactions.push(ReactionJson {
            product: write_random(self.rng, &product, true),
            precursors: texts,
        });
        for (i, mut p) in precursors.into_iter().enumerate() {
            p.strip_maps();
            let b = if i == 0 {
                budget - 1
            } else if self.rng.gen_bool(0.35) {
                self.rng.gen_range(0..budget)
            } else {
                0
            };
            self.expand(&p, b);
        }
        self.seen.insert(key, State::Done);
    }

    /// Whether precursors avoid every molecule still being expanded; a
    /// repeat would close a cycle.
    fn acyclic(&self, precursors: &[Graph]) -> bool {
        let keys: Vec<CanonicalKey> = precursors.iter().map(|p| canonical_key(&p.molecule())).collect();
        keys.iter().all(|k| self.seen.get(k) != Some(&State::InProgress))
            && (keys.len() < 2 || keys[0] != keys[1])
    }

    /// Breaks an acyclic single bond, sometimes leaving a halide behind.
    fn cut(&mut self, p: &Graph) -> Option<Vec<Graph>> {
        let mut bonds: Vec<usize> = (0..p.bonds.len())
            .filter(|&i| p.bonds[i].order == BondOrder::Single)
            .collect();
        bonds.shuffle(self.rng);
        for i in bonds {
            let Some((a, b)) = p.split_at(i) else { continue };
            if a.len() < 2 || b.len() < 2 {
                continue;
            }
            let bond = &p.bonds[i];
            let ends = [bond.begin, bond.end];
            let parts: Vec<Graph> = [a, b]
                .iter()
                .map(|side| {
                    let mut g = p.subgraph(side);
                    // keep bracket hydrogens in step with the lost bond
                    for &end in &ends {
                        if let Some(k) = side.iter().position(|&x| x == end) {
                            if let Some(h) = g.atoms[k].explicit_hydrogens.as_mut() {
                                *h += 1;
                            }
                            if self.rng.gen_bool(0.4) {
                                let atom = &g.atoms[k];
                                if atom.element == Element::C && atom.explicit_hydrogens.is_none() {
                                    let e = *[Element::CL, Element::BR, Element::I].choose(self.rng).unwrap();
                                    let x = g.add(Atom::new(e));
                                    g.bond(k, x, BondOrder::Single);
                                }
                            }
                        }
                    }
                    g
                })
                .collect();
            if parts.iter().all(|g| g.molecule().has_valid_valences()) && self.acyclic(&parts) {
                return Some(parts);
            }
        }
        None
    }

    /// Puts an unmapped acyl or Boc group on an N or O bearing hydrogen.
    fn protect(&mut self, p: &Graph) -> Option<Vec<Graph>> {
        let m = p.molecule();
        let sites: Vec<usize> = (0..p.atoms.len())
            .filter(|&i| {
                let a = &p.atoms[i];
                matches!(a.element, Element::N | Element::O)
                    && !a.aromatic
                    && a.explicit_hydrogens.is_none()
                    && m.implied_hydrogens(i) > 0
            })
            .collect();
        let &site = sites.choose(self.rng)?;
        let mut g = p.clone();
        let c = g.add(Atom::new(Element::C));
        let o = g.add(Atom::new(Element::O));
        g.bond(site, c, BondOrder::Single);
        g.bond(c, o, BondOrder::Double);
        if self.rng.gen_bool(0.5) {
            let me = g.add(Atom::new(Element::C));
            g.bond(c, me, BondOrder::Single);
        } else {
            let o2 = g.add(Atom::new(Element::O));
            let q = g.add(Atom::new(Element::C));
            g.bond(c, o2, BondOrder::Single);
            g.bond(o2, q, BondOrder::Single);
            for _ in 0..3 {
                let me = g.add(Atom::new(Element::C));
                g.bond(q, me, BondOrder::Single);
            }
        }
        let parts = vec![g];
        self.acyclic(&parts).then_some(parts)
    }

    /// Writes the product as the hydrogenation of a double bond.
    fn unsaturate(&mut self, p: &Graph) -> Option<Vec<Graph>> {
        let m = p.molecule();
        let mut bonds: Vec<usize> = (0..p.bonds.len())
            .filter(|&i| {
                let b = &p.bonds[i];
                b.order == BondOrder::Single
                    && [b.begin, b.end].iter().all(|&a| {
                        let atom = &p.atoms[a];
                        atom.element == Element::C
                            && !atom.aromatic
                            && atom.explicit_hydrogens.is_none()
                            && m.implied_hydrogens(a) > 0
                    })
            })
            .collect();
        bonds.shuffle(self.rng);
        let &i = bonds.first()?;
        let mut g = p.clone();
        g.bonds[i].order = BondOrder::Double;
        let parts = vec![g];
        self.acyclic(&parts).then_some(parts)
    }
}

/// A random route as dataset JSON. The route's own starting materials are
/// its single reference set and its depth is the reference depth.
pub fn random_record<R: Rng>(rng: &mut R) -> RecordJson {
    loop {
        let size = rng.gen_range(14..=30);
        let target = random_graph(rng, size);
        let budget = rng.gen_range(1..=8);
        let mut b = RouteBuilder {
            rng,
            reactions: Vec::new(),
            seen: HashMap::new(),
        };
        b.expand(&target, budget);
        if b.reactions.is_empty() {
            continue;
        }
        let reactions = b.reactions;
        let target_text = write_random(rng, &target, false);
        let mut raw = RecordJson {
            target: target_text,
            reactions,
            references: Vec::new(),
            ref_depth: 0,
        };
        let rec = DatasetRecord::from_json(raw.clone(), 0).expect("generated record");
        raw.references = vec![rec.route.leaves().into_iter().map(CanonicalKey::into_string).collect()];
        raw.ref_depth = route_depth(&rec.route).expect("generated route is acyclic");
        return raw;
    }
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize) -> Vec<RecordJson> {
    (0..n).map(|_| random_record(rng)).collect()
}

/// A random DAG of at most `max_reactions` reactions over unrelated alkane
/// chains. Molecule `i` is the chain of `i + 1` carbons; reactions only
/// point from lower to higher chain length, so the graph is acyclic.
pub fn random_dag<R: Rng>(rng: &mut R, max_reactions: usize) -> Route {
    let nodes = rng.gen_range(2..=2 * max_reactions.max(1) + 1);
    let chain = |i: usize| Molecule::from_smiles(&"C".repeat(i + 1)).unwrap();
    let mut reactions = Vec::new();
    let mut queue = vec![0usize];
    let mut expanded = vec![false; nodes];
    while let Some(i) = queue.pop() {
        if expanded[i] || i + 1 >= nodes || reactions.len() >= max_reactions {
            continue;
        }
        expanded[i] = true;
        if i > 0 && rng.gen_bool(0.3) {
            continue;
        }
        let k = rng.gen_range(1..=3.min(nodes - i - 1));
        let mut pool: Vec<usize> = (i + 1..nodes).collect();
        pool.shuffle(rng);
        pool.truncate(k);
        queue.extend(pool.iter().copied());
        reactions.push(Reaction::new(chain(i), pool.iter().map(|&j| chain(j)).collect()).unwrap());
    }
    Route::new(chain(0), reactions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use retroalign::route::{validate_route, StockSet};

    #[test]
    fn molecules_are_valence_correct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let size = rng.gen_range(1..40);
            let m = random_molecule(&mut rng, size);
            assert!(m.has_valid_valences());
        }
    }

    #[test]
    fn records_are_valid_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut depths = 0;
        for _ in 0..60 {
            let raw = random_record(&mut rng);
            let rec = DatasetRecord::from_json(raw, 0).unwrap();
            let stock = StockSet::from_keys(rec.references[0].iter().cloned());
            let report = validate_route(&rec.route, &stock);
            assert!(report.passed(), "{report:?}");
            depths += rec.ref_depth;
        }
        let mean = depths as f64 / 60.0;
        assert!((3.0..=5.0).contains(&mean), "mean depth {mean}");
    }

    #[test]
    fn dags_stay_small_and_acyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = random_dag(&mut rng, 12);
            assert!(!r.reactions().is_empty() && r.reactions().len() <= 12);
            assert!(route_depth(&r).is_ok());
        }
    }
}

/// Deliberately naive reference implementations to check the library against.
pub mod oracle {
    use std::collections::{BTreeSet, HashMap};

    use retroalign::{CanonicalKey, Route};

    /// Edit distance from the full dynamic-programming table.
    pub fn levenshtein(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            d[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    /// `(|a ∩ b|, |a ∪ b|)` by scanning lists, `(1, 1)` for two empty sets.
    pub fn jaccard<T: PartialEq>(a: &[T], b: &[T]) -> (usize, usize) {
        let mut union: Vec<&T> = Vec::new();
        for x in a.iter().chain(b) {
            if !union.contains(&x) {
                union.push(x);
            }
        }
        let shared = union.iter().filter(|x| a.contains(x) && b.contains(x)).count();
        if union.is_empty() {
            (1, 1)
        } else {
            (shared, union.len())
        }
    }

    /// Longest target-to-leaf path, found by walking every path.
    pub fn depth(route: &Route) -> usize {
        fn walk(route: &Route, key: &CanonicalKey) -> usize {
            let Some(r) = route.reactions().iter().find(|r| r.product_key() == key) else {
                return 0;
            };
            let mut best = 0;
            for p in r.precursor_keys() {
                best = best.max(walk(route, p));
            }
            best + 1
        }
        walk(route, route.target_key())
    }

    /// Index of the first entry whose set occurs most often, and that count.
    pub fn mode<T: Ord>(sets: &[BTreeSet<T>]) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for (i, s) in sets.iter().enumerate() {
            let count = sets.iter().filter(|t| *t == s).count();
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((i, count));
            }
        }
        best
    }

    /// Groups outcomes by target, then pairs successes with failures.
    pub fn ranking_pairs(outcomes: &[(String, String, bool)]) -> Vec<(String, String)> {
        let mut targets: Vec<&String> = Vec::new();
        for (_, t, _) in outcomes {
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        let mut by_target: HashMap<&String, Vec<&(String, String, bool)>> = HashMap::new();
        for o in outcomes {
            by_target.entry(&o.1).or_default().push(o);
        }
        let mut out = Vec::new();
        for t in targets {
            let group = &by_target[t];
            for p in group.iter().filter(|o| o.2) {
                for n in group.iter().filter(|o| !o.2) {
                    out.push((p.0.clone(), n.0.clone()));
                }
            }
        }
        out
    }
}
