use std::collections::HashMap;

use super::{Atom, Bond, BondOrder, Element, Molecule, SmilesError, SmilesErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BondSymbol {
    order: BondOrder,
    stereo: Option<char>,
}

struct RingOpening {
    atom: usize,
    bond: Option<BondSymbol>,
    position: usize,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    /// Index of the `.`-separated piece each atom was read from.
    pieces: Vec<usize>,
    bonds: Vec<Bond>,
    rings: HashMap<u32, RingOpening>,
}

/// Parses SMILES text into one molecule per connected component, ordered by
/// the first atom of each component. Atom order within a component follows
/// token order.
pub fn parse_smiles(text: &str) -> Result<Vec<Molecule>, SmilesError> {
    if text.trim().is_empty() {
        return Err(SmilesError::new(SmilesErrorKind::Empty, 0));
    }
    let mut parser = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        pieces: Vec::new(),
        bonds: Vec::new(),
        rings: HashMap::new(),
    };
    parser.run()?;
    parser.split_components()
}

impl<'a> Parser<'a> {
    fn err<T>(&self, kind: SmilesErrorKind) -> Result<T, SmilesError> {
        Err(SmilesError::new(kind, self.pos))
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<usize> = Vec::new();
        let mut pending: Option<(BondSymbol, usize)> = None;
        let mut piece = 0;

        while let Some(c) = self.peek() {
            match c {
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if pending.is_some() || prev.is_none() {
                        return self.err(SmilesErrorKind::UnexpectedChar(c as char));
                    }
                    let symbol = self.bond_symbol(c)?;
                    pending = Some((symbol, self.pos));
                    self.pos += 1;
                }
                b'(' => {
                    let Some(p) = prev else {
                        return self.err(SmilesErrorKind::UnexpectedChar('('));
                    };
                    if pending.is_some() {
                        return self.err(SmilesErrorKind::DanglingBond);
                    }
                    branches.push(p);
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return self.err(SmilesErrorKind::DanglingBond);
                    }
                    match branches.pop() {
                        Some(p) => prev = Some(p),
                        None => return self.err(SmilesErrorKind::UnbalancedParentheses),
                    }
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return self.err(SmilesErrorKind::DanglingBond);
                    }
                    if !branches.is_empty() {
                        return self.err(SmilesErrorKind::UnbalancedParentheses);
                    }
                    if prev.is_none() {
                        return self.err(SmilesErrorKind::UnexpectedChar('.'));
                    }
                    prev = None;
                    piece += 1;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return self.err(SmilesErrorKind::UnexpectedChar(c as char));
                    };
                    let start = self.pos;
                    let digit = self.ring_digit()?;
                    let bond = pending.take().map(|(s, _)| s);
                    self.ring_closure(atom, digit, bond, start)?;
                }
                b'*' => return self.err(SmilesErrorKind::Wildcard),
                _ => {
                    let atom = if c == b'[' {
                        self.bracket_atom()?
                    } else {
                        self.organic_atom()?
                    };
                    let index = self.atoms.len();
                    self.atoms.push(atom);
                    self.pieces.push(piece);
                    if let Some(p) = prev {
                        let symbol = pending.take().map(|(s, _)| s);
                        self.add_bond(p, index, symbol);
                    } else if pending.is_some() {
                        return self.err(SmilesErrorKind::DanglingBond);
                    }
                    prev = Some(index);
                }
            }
        }
        if let Some((_, at)) = pending {
            return Err(SmilesError::new(SmilesErrorKind::DanglingBond, at));
        }
        if !branches.is_empty() {
            return self.err(SmilesErrorKind::UnbalancedParentheses);
        }
        if let Some((&digit, open)) = self.rings.iter().min_by_key(|(_, o)| o.position) {
            return Err(SmilesError::new(
                SmilesErrorKind::UnclosedRing(digit),
                open.position,
            ));
        }
        if prev.is_none() {
            return self.err(SmilesErrorKind::Empty);
        }
        Ok(())
    }

    fn bond_symbol(&self, c: u8) -> Result<BondSymbol, SmilesError> {
        let (order, stereo) = match c {
            b'-' => (BondOrder::Single, None),
            b'=' => (BondOrder::Double, None),
            b'#' => (BondOrder::Triple, None),
            b':' => (BondOrder::Aromatic, None),
            b'/' => (BondOrder::Single, Some('/')),
            b'\\' => (BondOrder::Single, Some('\\')),
            other => return self.err(SmilesErrorKind::UnsupportedBond(other as char)),
        };
        Ok(BondSymbol { order, stereo })
    }

    fn add_bond(&mut self, a: usize, b: usize, symbol: Option<BondSymbol>) {
        let (order, stereo) = match symbol {
            Some(s) => (s.order, s.stereo),
            None if self.atoms[a].aromatic && self.atoms[b].aromatic => (BondOrder::Aromatic, None),
            None => (BondOrder::Single, None),
        };
        self.bonds.push(Bond {
            begin: a,
            end: b,
            order,
            stereo,
        });
    }

    fn ring_digit(&mut self) -> Result<u32, SmilesError> {
        if self.peek() == Some(b'%') {
            let digits = self.bytes.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => self.err(SmilesErrorKind::UnexpectedChar('%')),
            }
        } else {
            let d = self.bytes[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn ring_closure(
        &mut self,
        atom: usize,
        digit: u32,
        bond: Option<BondSymbol>,
        position: usize,
    ) -> Result<(), SmilesError> {
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(
                    digit,
                    RingOpening {
                        atom,
                        bond,
                        position,
                    },
                );
                Ok(())
            }
            Some(open) => {
                if open.atom == atom {
                    return Err(SmilesError::new(SmilesErrorKind::SelfLoop, position));
                }
                let symbol = match (open.bond, bond) {
                    (Some(a), Some(b)) if a.order != b.order => {
                        return Err(SmilesError::new(
                            SmilesErrorKind::RingBondConflict(digit),
                            position,
                        ))
                    }
                    (a, b) => b.or(a),
                };
                let duplicate = self.bonds.iter().any(|b| {
                    (b.begin == open.atom && b.end == atom) || (b.begin == atom && b.end == open.atom)
                });
                if duplicate {
                    return Err(SmilesError::new(
                        SmilesErrorKind::DuplicateBond(open.atom, atom),
                        position,
                    ));
                }
                self.add_bond(open.atom, atom, symbol);
                Ok(())
            }
        }
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let rest = &self.bytes[self.pos..];
        let (atom, width) = match rest {
            [b'C', b'l', ..] => (Atom::new(Element::CL), 2),
            [b'B', b'r', ..] => (Atom::new(Element::BR), 2),
            [b'B', ..] => (Atom::new(Element::B), 1),
            [b'C', ..] => (Atom::new(Element::C), 1),
            [b'N', ..] => (Atom::new(Element::N), 1),
            [b'O', ..] => (Atom::new(Element::O), 1),
            [b'P', ..] => (Atom::new(Element::P), 1),
            [b'S', ..] => (Atom::new(Element::S), 1),
            [b'F', ..] => (Atom::new(Element::F), 1),
            [b'I', ..] => (Atom::new(Element::I), 1),
            [b'b', ..] => (Atom::aromatic(Element::B), 1),
            [b'c', ..] => (Atom::aromatic(Element::C), 1),
            [b'n', ..] => (Atom::aromatic(Element::N), 1),
            [b'o', ..] => (Atom::aromatic(Element::O), 1),
            [b'p', ..] => (Atom::aromatic(Element::P), 1),
            [b's', ..] => (Atom::aromatic(Element::S), 1),
            [c, ..] if c.is_ascii_alphabetic() => {
                let end = rest
                    .iter()
                    .skip(1)
                    .position(|b| !b.is_ascii_lowercase())
                    .map_or(rest.len(), |p| p + 1);
                let word = String::from_utf8_lossy(&rest[..end]).into_owned();
                return self.err(SmilesErrorKind::UnknownElement(word));
            }
            [c, ..] => {
                let ch = self.text[self.pos..].chars().next().unwrap_or(*c as char);
                return self.err(SmilesErrorKind::UnexpectedChar(ch));
            }
            [] => return self.err(SmilesErrorKind::Empty),
        };
        self.pos += width;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let Some(close) = self.text[start..].find(']') else {
            return self.err(SmilesErrorKind::UnclosedBracket);
        };
        let inner = &self.text[start + 1..start + close];
        let atom = parse_bracket(inner).map_err(|kind| SmilesError::new(kind, start))?;
        self.pos = start + close + 1;
        Ok(atom)
    }

    fn split_components(self) -> Result<Vec<Molecule>, SmilesError> {
        let n = self.atoms.len();
        let mut component = vec![usize::MAX; n];
        let mut adjacency = vec![Vec::new(); n];
        for b in &self.bonds {
            adjacency[b.begin].push(b.end);
            adjacency[b.end].push(b.begin);
        }
        let mut count = 0;
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            component[start] = count;
            while let Some(a) = stack.pop() {
                for &nb in &adjacency[a] {
                    if component[nb] == usize::MAX {
                        component[nb] = count;
                        stack.push(nb);
                    }
                }
            }
            count += 1;
        }

        let piece_texts: Vec<&str> = self.text.split('.').collect();
        let mut local = vec![0usize; n];
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
        for a in 0..n {
            local[a] = groups[component[a]].len();
            groups[component[a]].push(a);
        }
        let mut group_bonds: Vec<Vec<Bond>> = vec![Vec::new(); count];
        for b in self.bonds {
            let c = component[b.begin];
            group_bonds[c].push(Bond {
                begin: local[b.begin],
                end: local[b.end],
                ..b
            });
        }
        let mut out = Vec::with_capacity(count);
        for (members, bonds) in groups.into_iter().zip(group_bonds) {
            let mut pieces: Vec<usize> = members.iter().map(|&a| self.pieces[a]).collect();
            pieces.dedup();
            pieces.sort_unstable();
            pieces.dedup();
            let source = if count == 1 {
                self.text.to_string()
            } else {
                pieces
                    .iter()
                    .map(|&p| piece_texts[p])
                    .collect::<Vec<_>>()
                    .join(".")
            };
            let atoms = members.iter().map(|&a| self.atoms[a].clone()).collect();
            out.push(Molecule::from_parts(atoms, bonds, source)?);
        }
        Ok(out)
    }
}

fn parse_bracket(inner: &str) -> Result<Atom, SmilesErrorKind> {
    let bad = || SmilesErrorKind::BadBracketAtom(inner.to_string());
    let b = inner.as_bytes();
    let mut i = 0;

    let digits = |i: &mut usize| -> Option<u32> {
        let start = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        (start < *i).then(|| inner[start..*i].parse().ok()).flatten()
    };

    let isotope = digits(&mut i);
    if isotope == Some(0) {
        return Err(bad());
    }

    if i < b.len() && b[i] == b'*' {
        return Err(SmilesErrorKind::Wildcard);
    }
    let (element, aromatic) = if i + 1 < b.len() && (&b[i..i + 2] == b"se" || &b[i..i + 2] == b"as") {
        let sym = if b[i] == b's' { "Se" } else { "As" };
        i += 2;
        (Element::from_symbol(sym).unwrap(), true)
    } else if i < b.len() && matches!(b[i], b'b' | b'c' | b'n' | b'o' | b'p' | b's') {
        let e = Element::from_symbol(&inner[i..i + 1].to_ascii_uppercase()).unwrap();
        i += 1;
        (e, true)
    } else if i < b.len() && b[i].is_ascii_uppercase() {
        let two = (i + 1 < b.len() && b[i + 1].is_ascii_lowercase())
            .then(|| Element::from_symbol(&inner[i..i + 2]))
            .flatten();
        match two {
            Some(e) => {
                i += 2;
                (e, false)
            }
            None => match Element::from_symbol(&inner[i..i + 1]) {
                Some(e) => {
                    i += 1;
                    (e, false)
                }
                None => return Err(SmilesErrorKind::UnknownElement(inner[i..i + 1].to_string())),
            },
        }
    } else if i < b.len() && b[i].is_ascii_alphabetic() {
        return Err(SmilesErrorKind::UnknownElement(inner[i..].to_string()));
    } else {
        return Err(bad());
    };

    let mut chirality = None;
    if i < b.len() && b[i] == b'@' {
        let start = i;
        i += 1;
        if i < b.len() && b[i] == b'@' {
            i += 1;
        } else if i + 1 < b.len() && matches!(&b[i..i + 2], b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
            i += 2;
            if digits(&mut i).is_none() {
                return Err(bad());
            }
        }
        chirality = Some(inner[start..i].to_string());
    }

    let mut hydrogens = 0u8;
    if i < b.len() && b[i] == b'H' {
        i += 1;
        hydrogens = match digits(&mut i) {
            Some(h) => u8::try_from(h).map_err(|_| bad())?,
            None => 1,
        };
    }

    let mut charge: i32 = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        let sign = if b[i] == b'+' { 1 } else { -1 };
        let sym = b[i];
        i += 1;
        if let Some(n) = digits(&mut i) {
            charge = sign * n as i32;
        } else {
            let mut n = 1;
            while i < b.len() && b[i] == sym {
                n += 1;
                i += 1;
            }
            charge = sign * n;
        }
        if !(-15..=15).contains(&charge) {
            return Err(bad());
        }
    }

    let mut map_number = None;
    if i < b.len() && b[i] == b':' {
        i += 1;
        map_number = Some(digits(&mut i).ok_or_else(bad)?);
    }
    if i != b.len() {
        return Err(bad());
    }
    if aromatic && !element.can_be_aromatic() {
        return Err(SmilesErrorKind::InvalidAromatic(element));
    }

    Ok(Atom {
        element,
        aromatic,
        charge: charge as i8,
        explicit_hydrogens: Some(hydrogens),
        isotope: isotope.map(|v| v as u16),
        // class 0 conventionally means "unmapped"
        map_number: map_number.filter(|&n| n != 0),
        chirality,
    })
}
