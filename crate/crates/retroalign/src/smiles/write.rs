use std::fmt::Write as _;

use super::{canonical_ranks, BondOrder, Molecule, SmilesError, SmilesErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteOptions {
    pub atom_maps: bool,
    pub stereo: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        WriteOptions {
            atom_maps: true,
            stereo: true,
        }
    }
}

impl WriteOptions {
    /// No atom maps, stereo kept: the form used for aligned route text.
    pub fn plain() -> Self {
        WriteOptions {
            atom_maps: false,
            stereo: true,
        }
    }
}

/// SMILES text plus the order in which atoms were emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedSmiles {
    pub text: String,
    /// `atom_order[k]` is the atom written as the `k`-th atom token.
    pub atom_order: Vec<usize>,
}

impl RootedSmiles {
    /// Output position of `atom`, i.e. how many atom tokens precede it.
    pub fn position_of(&self, atom: usize) -> Option<usize> {
        self.atom_order.iter().position(|&a| a == atom)
    }

    /// Positions for every atom, indexed by atom.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![usize::MAX; self.atom_order.len()];
        for (k, &a) in self.atom_order.iter().enumerate() {
            pos[a] = k;
        }
        pos
    }
}

/// Writes one molecule from arbitrary roots, computing canonical ranks once.
pub struct SmilesWriter<'m> {
    mol: &'m Molecule,
    ranks: Vec<usize>,
}

impl<'m> SmilesWriter<'m> {
    pub fn new(mol: &'m Molecule) -> Self {
        SmilesWriter {
            mol,
            ranks: canonical_ranks(mol),
        }
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// The rank-0 atom.
    pub fn first_ranked(&self) -> usize {
        self.ranks.iter().position(|&r| r == 0).unwrap_or(0)
    }

    pub fn rooted(&self, root: usize) -> Result<RootedSmiles, SmilesError> {
        self.try_rooted_with(root, &WriteOptions::default())
    }

    pub fn try_rooted_with(
        &self,
        root: usize,
        opts: &WriteOptions,
    ) -> Result<RootedSmiles, SmilesError> {
        if root >= self.mol.len() {
            return Err(SmilesError::new(SmilesErrorKind::AtomIndex(root), 0));
        }
        Ok(self.rooted_with(root, opts))
    }

    pub(crate) fn rooted_with(&self, root: usize, opts: &WriteOptions) -> RootedSmiles {
        let mut walk = Walk::new(self.mol, &self.ranks);
        let mut starts = vec![root];
        walk.visit(root);
        let mut remaining: Vec<usize> = (0..self.mol.len()).collect();
        remaining.sort_by_key(|&a| self.ranks[a]);
        for a in remaining {
            if !walk.visited[a] {
                starts.push(a);
                walk.visit(a);
            }
        }

        let mut out = Emitter {
            mol: self.mol,
            opts,
            walk: &walk,
            text: String::with_capacity(self.mol.len() * 2),
            order: Vec::with_capacity(self.mol.len()),
            digit_of: vec![0; self.mol.bonds().len()],
            free: Vec::new(),
            used: 0,
        };
        for (i, &s) in starts.iter().enumerate() {
            if i > 0 {
                out.text.push('.');
            }
            out.emit(s);
        }
        RootedSmiles {
            text: out.text,
            atom_order: out.order,
        }
    }
}

/// Writes `m` as SMILES starting at `root`, visiting neighbors in ascending
/// canonical rank.
pub fn write_rooted(m: &Molecule, root: usize) -> Result<RootedSmiles, SmilesError> {
    SmilesWriter::new(m).rooted(root)
}

/// Depth-first spanning tree with ring-closure bookkeeping.
struct Walk<'m> {
    mol: &'m Molecule,
    ranks: &'m [usize],
    visited: Vec<bool>,
    bond_seen: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    ring_opens: Vec<Vec<usize>>,
    ring_closes: Vec<Vec<usize>>,
}

impl<'m> Walk<'m> {
    fn new(mol: &'m Molecule, ranks: &'m [usize]) -> Self {
        let n = mol.len();
        Walk {
            mol,
            ranks,
            visited: vec![false; n],
            bond_seen: vec![false; mol.bonds().len()],
            children: vec![Vec::new(); n],
            ring_opens: vec![Vec::new(); n],
            ring_closes: vec![Vec::new(); n],
        }
    }

    fn visit(&mut self, start: usize) {
        // explicit stack of (atom, sorted neighbors, cursor)
        let mut stack: Vec<(usize, Vec<(usize, usize)>, usize)> = Vec::new();
        self.visited[start] = true;
        stack.push((start, self.sorted_neighbors(start), 0));
        while let Some(top) = stack.last_mut() {
            let (u, ref nbs, ref mut cursor) = *top;
            if *cursor == nbs.len() {
                stack.pop();
                continue;
            }
            let (v, b) = nbs[*cursor];
            *cursor += 1;
            if self.bond_seen[b] {
                continue;
            }
            self.bond_seen[b] = true;
            if self.visited[v] {
                self.ring_closes[u].push(b);
                self.ring_opens[v].push(b);
            } else {
                self.visited[v] = true;
                self.children[u].push((v, b));
                let nbs = self.sorted_neighbors(v);
                stack.push((v, nbs, 0));
            }
        }
    }

    fn sorted_neighbors(&self, a: usize) -> Vec<(usize, usize)> {
        let mut nbs = self.mol.neighbors(a).to_vec();
        nbs.sort_by_key(|&(n, _)| self.ranks[n]);
        nbs
    }
}

struct Emitter<'a, 'm> {
    mol: &'m Molecule,
    opts: &'a WriteOptions,
    walk: &'a Walk<'m>,
    text: String,
    order: Vec<usize>,
    digit_of: Vec<u32>,
    free: Vec<u32>,
    used: u32,
}

impl Emitter<'_, '_> {
    fn emit(&mut self, start: usize) {
        enum Step {
            Atom(usize, Option<usize>),
            Open,
            Close,
        }
        let mut stack = vec![Step::Atom(start, None)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Open => self.text.push('('),
                Step::Close => self.text.push(')'),
                Step::Atom(u, via) => {
                    if let Some(b) = via {
                        self.bond_symbol(b);
                    }
                    self.atom_token(u);
                    self.order.push(u);
                    self.ring_digits(u);
                    let children = &self.walk.children[u];
                    // pushed in reverse so the first child is emitted first
                    for (i, &(v, b)) in children.iter().enumerate().rev() {
                        let last = i + 1 == children.len();
                        if !last {
                            stack.push(Step::Close);
                        }
                        stack.push(Step::Atom(v, Some(b)));
                        if !last {
                            stack.push(Step::Open);
                        }
                    }
                }
            }
        }
    }

    fn ring_digits(&mut self, u: usize) {
        for &b in &self.walk.ring_closes[u] {
            let d = self.digit_of[b];
            push_digit(&mut self.text, d);
        }
        for &b in &self.walk.ring_opens[u] {
            let d = self.alloc();
            self.digit_of[b] = d;
            self.bond_symbol(b);
            push_digit(&mut self.text, d);
        }
        for &b in &self.walk.ring_closes[u] {
            self.free.push(self.digit_of[b]);
        }
    }

    fn alloc(&mut self) -> u32 {
        if let Some((i, _)) = self.free.iter().enumerate().min_by_key(|(_, &d)| d) {
            return self.free.swap_remove(i);
        }
        self.used += 1;
        self.used
    }

    fn bond_symbol(&mut self, b: usize) {
        let bond = &self.mol.bonds()[b];
        let both_aromatic =
            self.mol.atom(bond.begin).aromatic && self.mol.atom(bond.end).aromatic;
        match bond.order {
            BondOrder::Single => match bond.stereo {
                Some(c) if self.opts.stereo => self.text.push(c),
                _ if both_aromatic => self.text.push('-'),
                _ => {}
            },
            BondOrder::Double => self.text.push('='),
            BondOrder::Triple => self.text.push('#'),
            BondOrder::Aromatic if !both_aromatic => self.text.push(':'),
            BondOrder::Aromatic => {}
        }
    }

    fn atom_token(&mut self, u: usize) {
        let atom = self.mol.atom(u);
        let map = atom.map_number.filter(|_| self.opts.atom_maps);
        let chirality = atom.chirality.as_deref().filter(|_| self.opts.stereo);
        let symbol = atom.element.symbol();
        let implied = self.mol.implied_hydrogens(u);
        let hydrogens = self.mol.total_hydrogens(u);
        let bare = atom.element.is_organic_subset()
            && atom.charge == 0
            && atom.isotope.is_none()
            && map.is_none()
            && chirality.is_none()
            && hydrogens == implied;
        if bare {
            if atom.aromatic {
                self.text.push_str(&symbol.to_ascii_lowercase());
            } else {
                self.text.push_str(symbol);
            }
            return;
        }
        self.text.push('[');
        if let Some(iso) = atom.isotope {
            let _ = write!(self.text, "{iso}");
        }
        if atom.aromatic {
            self.text.push_str(&symbol.to_ascii_lowercase());
        } else {
            self.text.push_str(symbol);
        }
        if let Some(c) = chirality {
            self.text.push_str(c);
        }
        match hydrogens {
            0 => {}
            1 => self.text.push('H'),
            h => {
                let _ = write!(self.text, "H{h}");
            }
        }
        match atom.charge {
            0 => {}
            1 => self.text.push('+'),
            -1 => self.text.push('-'),
            c if c > 0 => {
                let _ = write!(self.text, "+{c}");
            }
            c => {
                let _ = write!(self.text, "-{}", -(c as i16));
            }
        }
        if let Some(n) = map {
            let _ = write!(self.text, ":{n}");
        }
        self.text.push(']');
    }
}

fn push_digit(text: &mut String, d: u32) {
    if d < 10 {
        text.push(char::from(b'0' + d as u8));
    } else {
        let _ = write!(text, "%{d:02}");
    }
}
