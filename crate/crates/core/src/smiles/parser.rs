use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::aromaticity;
use super::element::Element;
use super::graph::{build_adjacency, Atom, Bond, BondOrder, BondStereo, MolGraph};
use super::matching;
use super::rings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    UnclosedRing,
    UnclosedBranch,
    UnknownSymbol,
    BadBracketAtom,
    ValenceError,
    AromaticityError,
    EmptyInput,
    WildcardUnsupported,
    /// A bond, branch, dot or ring label where the grammar does not allow it.
    UnexpectedToken,
    /// Ring closure onto the same atom, onto an already bonded atom, or with
    /// conflicting bond symbols at its two ends.
    RingBondConflict,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::UnclosedRing => "unclosed ring",
            ParseErrorKind::UnclosedBranch => "unbalanced branch",
            ParseErrorKind::UnknownSymbol => "unknown symbol",
            ParseErrorKind::BadBracketAtom => "malformed bracket atom",
            ParseErrorKind::ValenceError => "valence exceeded",
            ParseErrorKind::AromaticityError => "aromaticity error",
            ParseErrorKind::EmptyInput => "empty input",
            ParseErrorKind::WildcardUnsupported => "wildcard atom not supported",
            ParseErrorKind::UnexpectedToken => "unexpected token",
            ParseErrorKind::RingBondConflict => "conflicting ring bond",
        };
        f.write_str(s)
    }
}

/// First grammar or chemistry violation in a SMILES string, with the
/// character offset where it was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl ParseError {
    fn new(kind: ParseErrorKind, position: usize) -> ParseError {
        ParseError { kind, position }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSymbol {
    fn from_char(c: char) -> Option<BondSymbol> {
        Some(match c {
            '-' => BondSymbol::Single,
            '=' => BondSymbol::Double,
            '#' => BondSymbol::Triple,
            ':' => BondSymbol::Aromatic,
            '/' => BondSymbol::Up,
            '\\' => BondSymbol::Down,
            _ => return None,
        })
    }

    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Single | BondSymbol::Up | BondSymbol::Down => BondOrder::Single,
            BondSymbol::Double => BondOrder::Double,
            BondSymbol::Triple => BondOrder::Triple,
            BondSymbol::Aromatic => BondOrder::Aromatic,
        }
    }

    fn stereo(self) -> Option<BondStereo> {
        match self {
            BondSymbol::Up => Some(BondStereo::Up),
            BondSymbol::Down => Some(BondStereo::Down),
            _ => None,
        }
    }
}

struct RawAtom {
    atom: Atom,
    position: usize,
}

struct RawBond {
    a: usize,
    b: usize,
    symbol: Option<BondSymbol>,
    position: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Start,
    AfterAtom,
    AfterBranchClose,
    AfterBranchOpen,
    AfterBond { ring_ok: bool },
    AfterDot,
}

struct Grammar<'a> {
    chars: &'a [char],
    pos: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<RawBond>,
}

/// Parse a SMILES string into a validated molecular graph.
pub fn parse(smiles: &str) -> Result<MolGraph> {
    let chars: Vec<char> = smiles.chars().collect();
    if chars.is_empty() {
        return Err(ParseError::new(ParseErrorKind::EmptyInput, 0));
    }
    let mut g = Grammar { chars: &chars, pos: 0, atoms: Vec::new(), bonds: Vec::new() };
    g.run()?;
    build(g.atoms, g.bonds)
}

/// True iff `parse` succeeds.
pub fn is_valid(smiles: &str) -> bool {
    parse(smiles).is_ok()
}

impl Grammar<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn run(&mut self) -> Result<()> {
        use ParseErrorKind::*;
        let mut state = State::Start;
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondSymbol, usize)> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        // ring label -> (atom, bond symbol, position of label)
        let mut open_rings: BTreeMap<u32, (usize, Option<BondSymbol>, usize)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            if c == '*' {
                return Err(ParseError::new(WildcardUnsupported, start));
            }
            if c == '[' || c.is_ascii_alphabetic() {
                let atom = if c == '[' { self.bracket_atom()? } else { self.organic_atom()? };
                let idx = self.atoms.len();
                self.atoms.push(RawAtom { atom, position: start });
                match prev {
                    Some(p) => {
                        let (symbol, position) = match pending.take() {
                            Some((s, p)) => (Some(s), p),
                            None => (None, start),
                        };
                        self.bonds.push(RawBond { a: p, b: idx, symbol, position });
                    }
                    None => {
                        if let Some((_, p)) = pending {
                            return Err(ParseError::new(UnexpectedToken, p));
                        }
                    }
                }
                prev = Some(idx);
                state = State::AfterAtom;
                continue;
            }
            if let Some(symbol) = BondSymbol::from_char(c) {
                let ring_ok = match state {
                    State::AfterAtom => true,
                    State::AfterBranchClose | State::AfterBranchOpen => false,
                    _ => return Err(ParseError::new(UnexpectedToken, start)),
                };
                pending = Some((symbol, start));
                state = State::AfterBond { ring_ok };
                self.pos += 1;
                continue;
            }
            if c.is_ascii_digit() || c == '%' {
                let allowed = matches!(state, State::AfterAtom | State::AfterBond { ring_ok: true });
                if !allowed {
                    return Err(ParseError::new(UnexpectedToken, start));
                }
                let label = self.ring_label()?;
                let current = prev.expect("ring label follows an atom");
                let bond_here = pending.take().map(|(s, _)| s);
                match open_rings.remove(&label) {
                    Some((other, bond_there, _)) => {
                        if other == current {
                            return Err(ParseError::new(RingBondConflict, start));
                        }
                        if self
                            .bonds
                            .iter()
                            .any(|b| (b.a == other && b.b == current) || (b.a == current && b.b == other))
                        {
                            return Err(ParseError::new(RingBondConflict, start));
                        }
                        let symbol = match (bond_there, bond_here) {
                            (Some(x), Some(y)) if x.order() != y.order() => {
                                return Err(ParseError::new(RingBondConflict, start));
                            }
                            (Some(x), _) => Some(x),
                            (None, y) => y,
                        };
                        self.bonds.push(RawBond { a: other, b: current, symbol, position: start });
                    }
                    None => {
                        open_rings.insert(label, (current, bond_here, start));
                    }
                }
                state = State::AfterAtom;
                continue;
            }
            match c {
                '(' => {
                    if !matches!(state, State::AfterAtom | State::AfterBranchClose) {
                        return Err(ParseError::new(UnexpectedToken, start));
                    }
                    branches.push((prev.expect("branch follows an atom"), start));
                    state = State::AfterBranchOpen;
                }
                ')' => {
                    if !matches!(state, State::AfterAtom | State::AfterBranchClose) {
                        return Err(ParseError::new(UnexpectedToken, start));
                    }
                    match branches.pop() {
                        Some((root, _)) => prev = Some(root),
                        None => return Err(ParseError::new(UnclosedBranch, start)),
                    }
                    state = State::AfterBranchClose;
                }
                '.' => {
                    if !matches!(state, State::AfterAtom | State::AfterBranchClose) || !branches.is_empty() {
                        return Err(ParseError::new(UnexpectedToken, start));
                    }
                    prev = None;
                    state = State::AfterDot;
                }
                _ => return Err(ParseError::new(UnknownSymbol, start)),
            }
            self.pos += 1;
        }

        if let Some((_, p)) = pending {
            return Err(ParseError::new(UnexpectedToken, p));
        }
        let unclosed_branch = branches.first().map(|&(_, p)| p);
        let unclosed_ring = open_rings.values().map(|&(_, _, p)| p).min();
        match (unclosed_branch, unclosed_ring) {
            (Some(b), Some(r)) if b < r => return Err(ParseError::new(UnclosedBranch, b)),
            (_, Some(r)) => return Err(ParseError::new(UnclosedRing, r)),
            (Some(b), None) => return Err(ParseError::new(UnclosedBranch, b)),
            (None, None) => {}
        }
        if matches!(state, State::AfterDot) {
            return Err(ParseError::new(UnexpectedToken, self.pos - 1));
        }
        Ok(())
    }

    fn ring_label(&mut self) -> Result<u32> {
        let start = self.pos;
        let c = self.peek().unwrap();
        if c == '%' {
            match (self.peek_at(1), self.peek_at(2)) {
                (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 3;
                    Ok(a.to_digit(10).unwrap() * 10 + b.to_digit(10).unwrap())
                }
                _ => Err(ParseError::new(ParseErrorKind::UnexpectedToken, start)),
            }
        } else {
            self.pos += 1;
            Ok(c.to_digit(10).unwrap())
        }
    }

    fn organic_atom(&mut self) -> Result<Atom> {
        let start = self.pos;
        let c = self.peek().unwrap();
        let (element, aromatic, len) = match c {
            'C' if self.peek_at(1) == Some('l') => (Element::CL, false, 2),
            'B' if self.peek_at(1) == Some('r') => (Element::BR, false, 2),
            'B' => (Element::B, false, 1),
            'C' => (Element::C, false, 1),
            'N' => (Element::N, false, 1),
            'O' => (Element::O, false, 1),
            'P' => (Element::P, false, 1),
            'S' => (Element::S, false, 1),
            'F' => (Element::F, false, 1),
            'I' => (Element::I, false, 1),
            'b' => (Element::B, true, 1),
            'c' => (Element::C, true, 1),
            'n' => (Element::N, true, 1),
            'o' => (Element::O, true, 1),
            'p' => (Element::P, true, 1),
            's' => (Element::S, true, 1),
            _ => return Err(ParseError::new(ParseErrorKind::UnknownSymbol, start)),
        };
        self.pos += len;
        Ok(Atom {
            element,
            isotope: None,
            charge: 0,
            explicit_h: None,
            hydrogens: 0,
            aromatic,
            chirality: None,
            atom_class: None,
            index: 0,
        })
    }

    fn read_number(&mut self) -> Option<u64> {
        let mut value: Option<u64> = None;
        while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
            value = Some(value.unwrap_or(0).saturating_mul(10).saturating_add(d as u64));
            self.pos += 1;
        }
        value
    }

    fn bracket_atom(&mut self) -> Result<Atom> {
        use ParseErrorKind::*;
        let open = self.pos;
        self.pos += 1;
        let bad = |p: usize| ParseError::new(BadBracketAtom, p);

        let isotope = match self.read_number() {
            Some(n) if n > u16::MAX as u64 => return Err(bad(open)),
            Some(n) => Some(n as u16),
            None => None,
        };

        let sym_start = self.pos;
        let c = self.peek().ok_or_else(|| bad(sym_start))?;
        if c == '*' {
            return Err(ParseError::new(WildcardUnsupported, sym_start));
        }
        let (element, aromatic) = if c.is_ascii_lowercase() {
            let two: String = [Some(c), self.peek_at(1)].iter().flatten().collect();
            if two == "se" || two == "as" {
                self.pos += 2;
                (Element::from_symbol(if two == "se" { "Se" } else { "As" }).unwrap(), true)
            } else {
                let e = match c {
                    'b' => Element::B,
                    'c' => Element::C,
                    'n' => Element::N,
                    'o' => Element::O,
                    'p' => Element::P,
                    's' => Element::S,
                    _ => return Err(bad(sym_start)),
                };
                self.pos += 1;
                (e, true)
            }
        } else if c.is_ascii_uppercase() {
            let two = self
                .peek_at(1)
                .filter(|n| n.is_ascii_lowercase())
                .and_then(|n| Element::from_symbol(&format!("{c}{n}")));
            match two {
                Some(e) => {
                    self.pos += 2;
                    (e, false)
                }
                None => {
                    let e = Element::from_symbol(&c.to_string()).ok_or_else(|| bad(sym_start))?;
                    self.pos += 1;
                    (e, false)
                }
            }
        } else {
            return Err(bad(sym_start));
        };

        let mut chirality = None;
        if self.peek() == Some('@') {
            let s = self.pos;
            self.pos += 1;
            if self.peek() == Some('@') {
                self.pos += 1;
            } else {
                let class: String = [self.peek(), self.peek_at(1)].iter().flatten().collect();
                if matches!(class.as_str(), "TH" | "AL" | "SP" | "TB" | "OH") {
                    self.pos += 2;
                    if self.read_number().is_none() {
                        return Err(bad(self.pos));
                    }
                }
            }
            chirality = Some(self.chars[s..self.pos].iter().collect::<String>());
        }

        let mut explicit_h = 0u8;
        if self.peek() == Some('H') {
            self.pos += 1;
            explicit_h = match self.read_number() {
                Some(n) if n > 9 => return Err(bad(self.pos)),
                Some(n) => n as u8,
                None => 1,
            };
        }

        let mut charge: i64 = 0;
        if let Some(sign @ ('+' | '-')) = self.peek() {
            let unit = if sign == '+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.read_number() {
                if n > 15 {
                    return Err(bad(self.pos));
                }
                charge = unit * n as i64;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
                if charge.abs() > 15 {
                    return Err(bad(self.pos));
                }
            }
        }

        let mut atom_class = None;
        if self.peek() == Some(':') {
            self.pos += 1;
            match self.read_number() {
                Some(n) if n <= u32::MAX as u64 => atom_class = Some(n as u32),
                _ => return Err(bad(self.pos)),
            }
        }

        if self.peek() != Some(']') {
            return Err(bad(self.pos.min(self.chars.len())));
        }
        self.pos += 1;
        if aromatic && !element.is_aromatic_capable() {
            return Err(bad(sym_start));
        }
        Ok(Atom {
            element,
            isotope,
            charge: charge as i8,
            explicit_h: Some(explicit_h),
            hydrogens: explicit_h,
            aromatic,
            chirality,
            atom_class,
            index: 0,
        })
    }
}

fn order_value(order: BondOrder) -> u32 {
    match order {
        BondOrder::Single | BondOrder::Aromatic => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
    }
}

/// Chemistry phase: resolve aromatic bonds, kekulize, assign hydrogens,
/// fold plain explicit hydrogens, then perceive aromaticity.
fn build(raw_atoms: Vec<RawAtom>, raw_bonds: Vec<RawBond>) -> Result<MolGraph> {
    use ParseErrorKind::*;
    let positions: Vec<usize> = raw_atoms.iter().map(|r| r.position).collect();
    let mut atoms: Vec<Atom> = raw_atoms.into_iter().map(|r| r.atom).collect();
    let mut bonds: Vec<Bond> = raw_bonds
        .iter()
        .map(|rb| Bond {
            a: rb.a,
            b: rb.b,
            order: rb.symbol.map(BondSymbol::order).unwrap_or(BondOrder::Single),
            stereo: rb.symbol.and_then(BondSymbol::stereo),
        })
        .collect();

    let adj = build_adjacency(atoms.len(), &bonds);
    let ring = rings::ring_bonds(&adj, bonds.len());

    // Implicit bonds between aromatic atoms are aromatic only inside rings.
    for (i, rb) in raw_bonds.iter().enumerate() {
        let both = atoms[rb.a].aromatic && atoms[rb.b].aromatic;
        match rb.symbol {
            None if both && ring[i] => bonds[i].order = BondOrder::Aromatic,
            Some(BondSymbol::Aromatic) if !(both && ring[i]) => {
                return Err(ParseError::new(AromaticityError, rb.position));
            }
            _ => {}
        }
    }
    for (i, atom) in atoms.iter().enumerate() {
        if atom.aromatic && !adj[i].iter().any(|&(_, e)| ring[e]) {
            return Err(ParseError::new(AromaticityError, positions[i]));
        }
    }

    kekulize(&atoms, &mut bonds, &adj, &positions)?;

    for i in 0..atoms.len() {
        let sum: u32 = adj[i].iter().map(|&(_, e)| order_value(bonds[e].order)).sum();
        if atoms[i].explicit_h.is_none() {
            let v = aromaticity::lowest_valence_at_least(atoms[i].element, 0, sum)
                .ok_or_else(|| ParseError::new(ValenceError, positions[i]))?;
            atoms[i].hydrogens = (v - sum) as u8;
        }
    }

    let (atoms, bonds) = fold_hydrogens(atoms, bonds);
    let mut atoms = atoms;
    let mut bonds = bonds;
    let adj = build_adjacency(atoms.len(), &bonds);
    let ring = rings::ring_bonds(&adj, bonds.len());
    aromaticity::perceive(&mut atoms, &mut bonds, &adj, &ring);
    Ok(MolGraph::from_parts(atoms, bonds))
}

fn kekulize(atoms: &[Atom], bonds: &mut [Bond], adj: &[Vec<(usize, usize)>], positions: &[usize]) -> Result<()> {
    if !bonds.iter().any(|b| b.order == BondOrder::Aromatic) && !atoms.iter().any(|a| a.aromatic) {
        return Ok(());
    }
    let mut need = vec![false; atoms.len()];
    for (i, atom) in atoms.iter().enumerate() {
        if !atom.aromatic {
            continue;
        }
        let base: u32 =
            adj[i].iter().map(|&(_, e)| order_value(bonds[e].order)).sum::<u32>() + atom.explicit_h.unwrap_or(0) as u32;
        let charge = atom.charge as i32;
        need[i] = aromaticity::needs_pi_bond(atom.element, charge, base);
    }
    let mut local: Vec<usize> = vec![usize::MAX; atoms.len()];
    let mut members = Vec::new();
    for i in 0..atoms.len() {
        if need[i] {
            local[i] = members.len();
            members.push(i);
        }
    }
    let mut graph = vec![Vec::new(); members.len()];
    for (li, &i) in members.iter().enumerate() {
        for &(w, e) in &adj[i] {
            if bonds[e].order == BondOrder::Aromatic && need[w] {
                graph[li].push(local[w]);
            }
        }
    }
    let mate = matching::max_matching(&graph);
    if let Some(li) = mate.iter().position(Option::is_none) {
        return Err(ParseError::new(ParseErrorKind::AromaticityError, positions[members[li]]));
    }
    for bond in bonds.iter_mut() {
        if bond.order != BondOrder::Aromatic {
            continue;
        }
        let (la, lb) = (local[bond.a], local[bond.b]);
        bond.order = if la != usize::MAX && lb != usize::MAX && mate[la] == Some(lb) {
            BondOrder::Double
        } else {
            BondOrder::Single
        };
    }
    Ok(())
}

/// Removes plain `[H]` atoms bonded to a single heavy atom, moving them into
/// that atom's hydrogen count.
fn fold_hydrogens(atoms: Vec<Atom>, bonds: Vec<Bond>) -> (Vec<Atom>, Vec<Bond>) {
    let adj = build_adjacency(atoms.len(), &bonds);
    let plain = |i: usize| {
        let a = &atoms[i];
        a.element == Element::H
            && a.isotope.is_none()
            && a.charge == 0
            && a.explicit_h == Some(0)
            && a.chirality.is_none()
            && a.atom_class.is_none()
    };
    let mut remove = vec![false; atoms.len()];
    let mut extra = vec![0u8; atoms.len()];
    for i in 0..atoms.len() {
        if plain(i) && adj[i].len() == 1 {
            let (w, e) = adj[i][0];
            if atoms[w].element != Element::H && bonds[e].order == BondOrder::Single {
                remove[i] = true;
                extra[w] = extra[w].saturating_add(1);
            }
        }
    }
    if !remove.iter().any(|&r| r) {
        return (atoms, bonds);
    }
    let mut remap = vec![usize::MAX; atoms.len()];
    let mut kept = Vec::new();
    for (i, mut atom) in atoms.into_iter().enumerate() {
        if remove[i] {
            continue;
        }
        atom.hydrogens = atom.hydrogens.saturating_add(extra[i]);
        if let Some(h) = atom.explicit_h.as_mut() {
            *h = h.saturating_add(extra[i]);
        }
        remap[i] = kept.len();
        kept.push(atom);
    }
    let bonds = bonds
        .into_iter()
        .filter(|b| !remove[b.a] && !remove[b.b])
        .map(|b| Bond { a: remap[b.a], b: remap[b.b], ..b })
        .collect();
    (kept, bonds)
}
