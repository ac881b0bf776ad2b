//! Molecular graphs read from and written to SMILES.
//!
//! The supported dialect covers organic-subset atoms, bracket atoms (isotope,
//! charge, hydrogen count, atom-map class), ring closures including `%nn`,
//! explicit bond symbols, lowercase aromatic atoms and `.`-separated
//! components. Stereo markers are kept on atoms and bonds as written but take
//! no part in ranking or graph comparison.

mod canon;
mod element;
mod iso;
mod parse;
mod write;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::canonical_ranks;
pub use element::Element;
pub use iso::{find_isomorphism, is_isomorphic};
pub use parse::parse_smiles;
pub use write::{write_rooted, RootedSmiles, SmilesWriter, WriteOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i8,
    /// Hydrogen count written inside brackets. `None` for organic-subset
    /// atoms, whose hydrogens are implied by valence.
    pub explicit_hydrogens: Option<u8>,
    pub isotope: Option<u16>,
    pub map_number: Option<u32>,
    /// Chirality marker exactly as written (`@`, `@@`, `@TH1`, ...).
    pub chirality: Option<String>,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            aromatic: false,
            charge: 0,
            explicit_hydrogens: None,
            isotope: None,
            map_number: None,
            chirality: None,
        }
    }

    pub fn aromatic(element: Element) -> Self {
        Atom {
            aromatic: true,
            ..Atom::new(element)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    fn valence_contribution(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
    /// Directional marker (`/` or `\`) when the bond was written with one.
    pub stereo: Option<char>,
}

impl Bond {
    pub fn new(begin: usize, end: usize, order: BondOrder) -> Self {
        Bond {
            begin,
            end,
            order,
            stereo: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    Empty,
    UnexpectedChar(char),
    UnknownElement(String),
    Wildcard,
    BadBracketAtom(String),
    UnclosedBracket,
    UnbalancedParentheses,
    UnclosedRing(u32),
    RingBondConflict(u32),
    DanglingBond,
    UnsupportedBond(char),
    SelfLoop,
    DuplicateBond(usize, usize),
    InvalidAromatic(Element),
    DuplicateMapNumber(u32),
    AtomIndex(usize),
}

impl fmt::Display for SmilesErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmilesErrorKind::Empty => write!(f, "empty SMILES"),
            SmilesErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            SmilesErrorKind::UnknownElement(s) => write!(f, "unknown element '{s}'"),
            SmilesErrorKind::Wildcard => write!(f, "wildcard atom '*' is not supported"),
            SmilesErrorKind::BadBracketAtom(s) => write!(f, "malformed bracket atom '[{s}]'"),
            SmilesErrorKind::UnclosedBracket => write!(f, "unclosed '['"),
            SmilesErrorKind::UnbalancedParentheses => write!(f, "unbalanced parentheses"),
            SmilesErrorKind::UnclosedRing(d) => write!(f, "ring closure {d} is never closed"),
            SmilesErrorKind::RingBondConflict(d) => {
                write!(f, "conflicting bond symbols on ring closure {d}")
            }
            SmilesErrorKind::DanglingBond => write!(f, "bond symbol without a following atom"),
            SmilesErrorKind::UnsupportedBond(c) => write!(f, "unsupported bond symbol '{c}'"),
            SmilesErrorKind::SelfLoop => write!(f, "ring closure bonds an atom to itself"),
            SmilesErrorKind::DuplicateBond(a, b) => write!(f, "duplicate bond {a}-{b}"),
            SmilesErrorKind::InvalidAromatic(e) => write!(f, "element {e} cannot be aromatic"),
            SmilesErrorKind::DuplicateMapNumber(n) => write!(f, "atom-map number {n} used twice"),
            SmilesErrorKind::AtomIndex(i) => write!(f, "atom index {i} out of range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {position}")]
pub struct SmilesError {
    pub kind: SmilesErrorKind,
    /// Byte offset into the input, or 0 for structural errors.
    pub position: usize,
}

impl SmilesError {
    pub(crate) fn new(kind: SmilesErrorKind, position: usize) -> Self {
        SmilesError { kind, position }
    }
}

/// A connected molecular graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    source_text: String,
}

impl Molecule {
    pub fn from_parts(
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        source_text: impl Into<String>,
    ) -> Result<Self, SmilesError> {
        let err = |kind| Err(SmilesError::new(kind, 0));
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, bond) in bonds.iter().enumerate() {
            for end in [bond.begin, bond.end] {
                if end >= atoms.len() {
                    return err(SmilesErrorKind::AtomIndex(end));
                }
            }
            if bond.begin == bond.end {
                return err(SmilesErrorKind::SelfLoop);
            }
            if adjacency[bond.begin].iter().any(|&(n, _)| n == bond.end) {
                return err(SmilesErrorKind::DuplicateBond(bond.begin, bond.end));
            }
            adjacency[bond.begin].push((bond.end, i));
            adjacency[bond.end].push((bond.begin, i));
        }
        let mut maps = HashMap::new();
        for atom in &atoms {
            if atom.aromatic && !atom.element.can_be_aromatic() {
                return err(SmilesErrorKind::InvalidAromatic(atom.element));
            }
            if let Some(n) = atom.map_number {
                if maps.insert(n, ()).is_some() {
                    return err(SmilesErrorKind::DuplicateMapNumber(n));
                }
            }
        }
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            source_text: source_text.into(),
        })
    }

    /// Parses text that must describe exactly one connected component.
    pub fn from_smiles(text: &str) -> Result<Self, SmilesError> {
        let mut parts = parse_smiles(text)?;
        if parts.len() != 1 {
            return Err(SmilesError::new(SmilesErrorKind::UnexpectedChar('.'), 0));
        }
        Ok(parts.pop().unwrap())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> &Atom {
        &self.atoms[index]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// `(neighbor, bond index)` pairs in bond insertion order.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, i)| &self.bonds[i])
    }

    fn bond_sums(&self, atom: usize) -> (u8, u8) {
        let mut plain = 0u8;
        let mut aromatic = 0u8;
        for &(_, b) in &self.adjacency[atom] {
            match self.bonds[b].order {
                BondOrder::Aromatic => aromatic += 1,
                o => plain += o.valence_contribution(),
            }
        }
        (plain, aromatic)
    }

    /// Hydrogens implied by valence for organic-subset atoms written bare.
    /// Aromatic carbon takes one valence unit for its ring pi bond; other
    /// aromatic atoms never receive implicit hydrogens.
    pub fn implied_hydrogens(&self, atom: usize) -> u8 {
        let a = &self.atoms[atom];
        let (plain, aromatic) = self.bond_sums(atom);
        if a.aromatic {
            if a.element == Element::C {
                return 4u8.saturating_sub(plain + aromatic + 1);
            }
            return 0;
        }
        let used = plain + aromatic;
        a.element
            .default_valences()
            .iter()
            .find(|&&v| v >= used)
            .map_or(0, |&v| v - used)
    }

    pub fn total_hydrogens(&self, atom: usize) -> u8 {
        match self.atoms[atom].explicit_hydrogens {
            Some(h) => h,
            None if self.atoms[atom].element.is_organic_subset() => self.implied_hydrogens(atom),
            None => 0,
        }
    }

    /// Atoms whose bonds plus hydrogens exceed the largest standard valence
    /// for their (charge-adjusted) element. Elements without a valence table
    /// are never reported.
    pub fn valence_violations(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| !self.atom_valence_ok(i))
            .collect()
    }

    pub fn has_valid_valences(&self) -> bool {
        (0..self.atoms.len()).all(|i| self.atom_valence_ok(i))
    }

    fn atom_valence_ok(&self, atom: usize) -> bool {
        let a = &self.atoms[atom];
        // isoelectronic element: N+ behaves like C, O- like F, B- like C
        let z = a.element.atomic_number() as i16 - a.charge as i16;
        let Some(effective) = u8::try_from(z).ok().and_then(Element::from_atomic_number) else {
            return true;
        };
        let Some(&max) = effective.default_valences().last() else {
            return true;
        };
        let (plain, aromatic) = self.bond_sums(atom);
        let pi = u8::from(a.aromatic && a.element == Element::C && aromatic > 0);
        plain + aromatic + pi + self.total_hydrogens(atom) <= max
    }

    /// Map number to atom index.
    pub fn map_index(&self) -> HashMap<u32, usize> {
        self.atoms
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map_number.map(|n| (n, i)))
            .collect()
    }

    pub fn has_map_numbers(&self) -> bool {
        self.atoms.iter().any(|a| a.map_number.is_some())
    }

    pub fn without_map_numbers(&self) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.map_number = None;
        }
        m
    }

    /// Canonical SMILES of this toolkit, keeping atom-map numbers.
    pub fn to_smiles(&self) -> String {
        let writer = SmilesWriter::new(self);
        writer
            .rooted_with(writer.first_ranked(), &WriteOptions::default())
            .text
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        canonical_key(self)
    }
}

/// Identifies a molecular graph up to isomorphism. Atom-map numbers and
/// stereo markers are not part of the key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn canonical_key(m: &Molecule) -> CanonicalKey {
    let writer = SmilesWriter::new(m);
    let opts = WriteOptions {
        atom_maps: false,
        stereo: false,
    };
    CanonicalKey(writer.rooted_with(writer.first_ranked(), &opts).text)
}

/// Key of a possibly multi-component SMILES string: component keys sorted
/// and joined with `.`.
pub fn key_of_smiles(text: &str) -> Result<CanonicalKey, SmilesError> {
    let mut keys: Vec<String> = parse_smiles(text)?
        .iter()
        .map(|m| canonical_key(m).0)
        .collect();
    keys.sort();
    Ok(CanonicalKey(keys.join(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mol(s: &str) -> Molecule {
        Molecule::from_smiles(s).unwrap()
    }

    #[test]
    fn implied_hydrogens_follow_valence_tables() {
        let m = mol("CC(=O)N");
        assert_eq!(m.total_hydrogens(0), 3);
        assert_eq!(m.total_hydrogens(1), 0);
        assert_eq!(m.total_hydrogens(2), 0);
        assert_eq!(m.total_hydrogens(3), 2);

        let pyridine = mol("c1ccncc1");
        assert_eq!(pyridine.total_hydrogens(0), 1);
        assert_eq!(pyridine.total_hydrogens(3), 0);

        let thiophene = mol("c1ccsc1");
        assert_eq!(thiophene.total_hydrogens(3), 0);

        let sulfone = mol("CS(=O)(=O)C");
        assert_eq!(sulfone.total_hydrogens(1), 0);
    }

    #[test]
    fn valence_check_flags_overbonded_atoms() {
        assert!(mol("CC(=O)O").has_valid_valences());
        assert!(mol("O=[N+]([O-])c1ccccc1").has_valid_valences());
        assert!(mol("CC(=O)O[BH-](OC(C)=O)OC(C)=O").has_valid_valences());
        assert!(mol("c1ccc[nH]1").has_valid_valences());
        assert_eq!(mol("CC(C)(C)(C)C").valence_violations(), vec![1]);
        assert!(!mol("C=O=C").has_valid_valences());
        assert!(!mol("[CH4]C").has_valid_valences());
    }

    #[test]
    fn from_parts_rejects_bad_graphs() {
        let atoms = vec![Atom::new(Element::C), Atom::new(Element::C)];
        let dup = vec![
            Bond::new(0, 1, BondOrder::Single),
            Bond::new(1, 0, BondOrder::Single),
        ];
        assert!(Molecule::from_parts(atoms.clone(), dup, "").is_err());
        let self_loop = vec![Bond::new(0, 0, BondOrder::Single)];
        assert!(Molecule::from_parts(atoms.clone(), self_loop, "").is_err());
        let out_of_range = vec![Bond::new(0, 2, BondOrder::Single)];
        assert!(Molecule::from_parts(atoms, out_of_range, "").is_err());
        let bad_aromatic = vec![Atom::aromatic(Element::F)];
        assert!(Molecule::from_parts(bad_aromatic, vec![], "").is_err());
    }

    #[test]
    fn duplicate_map_numbers_are_rejected() {
        let err = parse_smiles("[CH3:1][CH3:1]").unwrap_err();
        assert_eq!(err.kind, SmilesErrorKind::DuplicateMapNumber(1));
    }

    #[test]
    fn keys_distinguish_and_identify() {
        assert_eq!(mol("CCO").canonical_key(), mol("OCC").canonical_key());
        assert_ne!(mol("CCO").canonical_key(), mol("CCN").canonical_key());
        assert_eq!(
            mol("[CH3:4][CH2:2][OH:9]").canonical_key(),
            mol("OCC").canonical_key()
        );
        assert_eq!(key_of_smiles("O.CC").unwrap(), key_of_smiles("CC.O").unwrap());
    }
}
