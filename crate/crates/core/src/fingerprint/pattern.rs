//! A small substructure matcher over a subset of SMARTS.
//!
//! Supported: `*`, `a`, `A`, organic and aromatic atom symbols, bracket
//! atoms with `#n`, element symbols, `H<n>`, `+<n>`/`-<n>`, `R`, recursive
//! `$(...)`, and the operators `!`, `&`, `,`, `;`. Bonds: `~ - = # : @` with
//! the same operators. Branches and single-digit ring closures.

use std::collections::HashSet;

use crate::smiles::{BondOrder, Element, MolGraph};

#[derive(Debug, Clone)]
enum Expr<P> {
    Prim(P),
    Not(Box<Expr<P>>),
    And(Vec<Expr<P>>),
    Or(Vec<Expr<P>>),
}

impl<P> Expr<P> {
    fn eval(&self, f: &impl Fn(&P) -> bool) -> bool {
        match self {
            Expr::Prim(p) => f(p),
            Expr::Not(e) => !e.eval(f),
            Expr::And(es) => es.iter().all(|e| e.eval(f)),
            Expr::Or(es) => es.iter().any(|e| e.eval(f)),
        }
    }
}

#[derive(Debug, Clone)]
enum AtomPrim {
    Any,
    Aromatic,
    Aliphatic,
    Number(u8),
    Element { z: u8, aromatic: bool },
    Hydrogens(u8),
    Charge(i8),
    InRing,
    Recursive(Box<Pattern>),
}

#[derive(Debug, Clone, Copy)]
enum BondPrim {
    Any,
    Single,
    Double,
    Triple,
    Aromatic,
    Ring,
}

type AtomExpr = Expr<AtomPrim>;
type BondExpr = Expr<BondPrim>;

#[derive(Debug, Clone)]
pub struct Pattern {
    atoms: Vec<AtomExpr>,
    /// For each atom after the first: the earlier atom it hangs off and the bond.
    parent: Vec<Option<(usize, BondExpr)>>,
    /// Ring-closure bonds, checked once both ends are placed.
    closures: Vec<Vec<(usize, BondExpr)>>,
}

fn default_bond() -> BondExpr {
    Expr::Or(vec![Expr::Prim(BondPrim::Single), Expr::Prim(BondPrim::Aromatic)])
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.i;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[start..self.i]).ok()?.parse().ok()
    }
}

/// Operator precedence, loosest first: `;`, `,`, `&` (or juxtaposition), `!`.
fn parse_expr<P>(
    c: &mut Cursor,
    prim: &dyn Fn(&mut Cursor) -> Result<P, String>,
    stop: &dyn Fn(u8) -> bool,
) -> Result<Expr<P>, String> {
    let mut low = Vec::new();
    loop {
        let mut ors = Vec::new();
        loop {
            let mut ands = Vec::new();
            loop {
                let mut negate = false;
                while c.peek() == Some(b'!') {
                    c.i += 1;
                    negate = !negate;
                }
                let p = Expr::Prim(prim(c)?);
                ands.push(if negate { Expr::Not(Box::new(p)) } else { p });
                match c.peek() {
                    Some(b'&') => c.i += 1,
                    Some(b',') | Some(b';') | None => break,
                    Some(ch) if stop(ch) => break,
                    _ => {}
                }
            }
            ors.push(collapse(ands, Expr::And));
            if c.peek() == Some(b',') {
                c.i += 1;
            } else {
                break;
            }
        }
        low.push(collapse(ors, Expr::Or));
        if c.peek() == Some(b';') {
            c.i += 1;
        } else {
            break;
        }
    }
    Ok(collapse(low, Expr::And))
}

fn collapse<P>(mut v: Vec<Expr<P>>, wrap: fn(Vec<Expr<P>>) -> Expr<P>) -> Expr<P> {
    if v.len() == 1 {
        v.pop().unwrap()
    } else {
        wrap(v)
    }
}

fn symbol_expr(z: u8, aromatic: bool) -> AtomExpr {
    Expr::Prim(AtomPrim::Element { z, aromatic })
}

#[allow(clippy::match_overlapping_arm)]
fn bracket_prim(c: &mut Cursor) -> Result<AtomPrim, String> {
    let ch = c.peek().ok_or("unterminated bracket")?;
    c.i += 1;
    if ch.is_ascii_uppercase() {
        let two = c
            .peek()
            .filter(u8::is_ascii_lowercase)
            .and_then(|l| Element::from_symbol(std::str::from_utf8(&[ch, l]).ok()?));
        if let Some(e) = two {
            c.i += 1;
            return Ok(AtomPrim::Element { z: e.atomic_number(), aromatic: false });
        }
    }
    Ok(match ch {
        b'*' => AtomPrim::Any,
        b'a' => AtomPrim::Aromatic,
        b'A' => AtomPrim::Aliphatic,
        b'R' => AtomPrim::InRing,
        b'#' => AtomPrim::Number(c.number().ok_or("expected atomic number")? as u8),
        b'H' => AtomPrim::Hydrogens(c.number().unwrap_or(1) as u8),
        b'+' | b'-' => {
            let n = c.number().unwrap_or(1) as i8;
            AtomPrim::Charge(if ch == b'+' { n } else { -n })
        }
        b'$' => {
            if c.peek() != Some(b'(') {
                return Err("expected ( after $".into());
            }
            let start = c.i + 1;
            let mut depth = 0;
            loop {
                match c.peek().ok_or("unterminated recursive pattern")? {
                    b'(' => depth += 1,
                    b')' => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                c.i += 1;
            }
            let inner = std::str::from_utf8(&c.s[start..c.i]).map_err(|e| e.to_string())?;
            c.i += 1;
            AtomPrim::Recursive(Box::new(Pattern::parse(inner)?))
        }
        b'A'..=b'Z' => {
            let e = Element::from_symbol(std::str::from_utf8(&[ch]).unwrap())
                .ok_or_else(|| format!("unknown element {}", ch as char))?;
            AtomPrim::Element { z: e.atomic_number(), aromatic: false }
        }
        b'c' | b'n' | b'o' | b's' | b'p' => {
            let e = Element::from_symbol(&(ch as char).to_ascii_uppercase().to_string()).unwrap();
            AtomPrim::Element { z: e.atomic_number(), aromatic: true }
        }
        other => return Err(format!("unexpected {:?} in atom", other as char)),
    })
}

fn bond_prim(c: &mut Cursor) -> Result<BondPrim, String> {
    let ch = c.peek().ok_or("expected bond")?;
    c.i += 1;
    Ok(match ch {
        b'~' => BondPrim::Any,
        b'-' => BondPrim::Single,
        b'=' => BondPrim::Double,
        b'#' => BondPrim::Triple,
        b':' => BondPrim::Aromatic,
        b'@' => BondPrim::Ring,
        other => return Err(format!("unexpected {:?} in bond", other as char)),
    })
}

fn is_bond_char(ch: u8) -> bool {
    matches!(ch, b'~' | b'-' | b'=' | b'#' | b':' | b'@' | b'!')
}

impl Pattern {
    pub fn parse(smarts: &str) -> Result<Pattern, String> {
        let mut c = Cursor { s: smarts.as_bytes(), i: 0 };
        let mut p = Pattern { atoms: Vec::new(), parent: Vec::new(), closures: Vec::new() };
        let mut prev: Option<usize> = None;
        let mut stack = Vec::new();
        let mut pending: Option<BondExpr> = None;
        let mut open: [Option<(usize, Option<BondExpr>)>; 10] = Default::default();

        while let Some(ch) = c.peek() {
            if is_bond_char(ch) {
                pending = Some(parse_expr(&mut c, &bond_prim, &|ch| !is_bond_char(ch))?);
                continue;
            }
            let atom = match ch {
                b'(' => {
                    stack.push(prev.ok_or("branch before atom")?);
                    c.i += 1;
                    continue;
                }
                b')' => {
                    prev = Some(stack.pop().ok_or("unbalanced )")?);
                    c.i += 1;
                    continue;
                }
                b'0'..=b'9' => {
                    let d = (ch - b'0') as usize;
                    c.i += 1;
                    let here = prev.ok_or("ring closure before atom")?;
                    match open[d].take() {
                        Some((other, bond)) => {
                            let bond = pending.take().or(bond).unwrap_or_else(default_bond);
                            p.closures[here].push((other, bond));
                        }
                        None => open[d] = Some((here, pending.take())),
                    }
                    continue;
                }
                b'[' => {
                    c.i += 1;
                    let e = parse_expr(&mut c, &bracket_prim, &|ch| ch == b']')?;
                    if c.peek() != Some(b']') {
                        return Err("unterminated bracket".into());
                    }
                    c.i += 1;
                    e
                }
                b'*' => {
                    c.i += 1;
                    Expr::Prim(AtomPrim::Any)
                }
                b'a' => {
                    c.i += 1;
                    Expr::Prim(AtomPrim::Aromatic)
                }
                b'c' | b'n' | b'o' | b's' | b'p' => {
                    c.i += 1;
                    let e = Element::from_symbol(&(ch as char).to_ascii_uppercase().to_string()).unwrap();
                    symbol_expr(e.atomic_number(), true)
                }
                b'C' if c.s.get(c.i + 1) == Some(&b'l') => {
                    c.i += 2;
                    symbol_expr(17, false)
                }
                b'B' if c.s.get(c.i + 1) == Some(&b'r') => {
                    c.i += 2;
                    symbol_expr(35, false)
                }
                b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                    c.i += 1;
                    let e = Element::from_symbol(&(ch as char).to_string()).unwrap();
                    symbol_expr(e.atomic_number(), false)
                }
                other => return Err(format!("unexpected {:?}", other as char)),
            };
            let idx = p.atoms.len();
            p.atoms.push(atom);
            p.closures.push(Vec::new());
            p.parent.push(prev.map(|q| (q, pending.take().unwrap_or_else(default_bond))));
            prev = Some(idx);
        }
        if p.atoms.is_empty() || !stack.is_empty() || open.iter().any(Option::is_some) {
            return Err(format!("incomplete pattern {smarts:?}"));
        }
        if p.parent.iter().skip(1).any(Option::is_none) {
            return Err("disconnected patterns are not supported".into());
        }
        Ok(p)
    }

    /// Whether any embedding exists.
    pub fn matches(&self, mol: &MolGraph) -> bool {
        (0..mol.atom_count()).any(|a| self.matches_at(mol, a))
    }

    /// Whether an embedding exists with the first pattern atom on `root`.
    pub fn matches_at(&self, mol: &MolGraph, root: usize) -> bool {
        let mut found = false;
        self.search(mol, root, &mut |_| {
            found = true;
            false
        });
        found
    }

    /// Number of embeddings that differ in their matched atom set.
    pub fn unique_matches(&self, mol: &MolGraph) -> usize {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        for root in 0..mol.atom_count() {
            self.search(mol, root, &mut |m| {
                let mut key = m.to_vec();
                key.sort_unstable();
                seen.insert(key);
                true
            });
        }
        seen.len()
    }

    fn search(&self, mol: &MolGraph, root: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
        if !atom_ok(&self.atoms[0], mol, root) {
            return;
        }
        let mut map = vec![root];
        let mut used = vec![false; mol.atom_count()];
        used[root] = true;
        self.extend(mol, &mut map, &mut used, visit);
    }

    /// Returns false once the visitor asks to stop.
    fn extend(
        &self,
        mol: &MolGraph,
        map: &mut Vec<usize>,
        used: &mut [bool],
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        let k = map.len();
        if k == self.atoms.len() {
            return visit(map);
        }
        let (parent, bond) = self.parent[k].as_ref().expect("connected pattern");
        for &(w, e) in mol.neighbors(map[*parent]) {
            if used[w] || !bond_ok(bond, mol, e) || !atom_ok(&self.atoms[k], mol, w) {
                continue;
            }
            let closes = self.closures[k]
                .iter()
                .all(|(other, b)| mol.neighbors(w).iter().any(|&(x, e2)| x == map[*other] && bond_ok(b, mol, e2)));
            if !closes {
                continue;
            }
            used[w] = true;
            map.push(w);
            let go_on = self.extend(mol, map, used, visit);
            map.pop();
            used[w] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
}

fn atom_ok(expr: &AtomExpr, mol: &MolGraph, atom: usize) -> bool {
    let a = &mol.atoms()[atom];
    expr.eval(&|p| match p {
        AtomPrim::Any => true,
        AtomPrim::Aromatic => a.aromatic,
        AtomPrim::Aliphatic => !a.aromatic,
        AtomPrim::Number(z) => a.element.atomic_number() == *z,
        AtomPrim::Element { z, aromatic } => a.element.atomic_number() == *z && a.aromatic == *aromatic,
        AtomPrim::Hydrogens(h) => {
            let explicit = mol.neighbors(atom).iter().filter(|&&(w, _)| mol.atoms()[w].element == Element::H).count();
            usize::from(a.hydrogens) + explicit == usize::from(*h)
        }
        AtomPrim::Charge(q) => a.charge == *q,
        AtomPrim::InRing => mol.is_ring_atom(atom),
        AtomPrim::Recursive(pat) => pat.matches_at(mol, atom),
    })
}

fn bond_ok(expr: &BondExpr, mol: &MolGraph, bond: usize) -> bool {
    let order = mol.bonds()[bond].order;
    expr.eval(&|p| match p {
        BondPrim::Any => true,
        BondPrim::Single => order == BondOrder::Single,
        BondPrim::Double => order == BondOrder::Double,
        BondPrim::Triple => order == BondOrder::Triple,
        BondPrim::Aromatic => order == BondOrder::Aromatic,
        BondPrim::Ring => mol.is_ring_bond(bond),
    })
}
