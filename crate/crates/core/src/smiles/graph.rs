use super::element::Element;
use super::rings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Small integer code used in hashing and canonical ranking.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }
}

/// Directional marker from `/` or `\`, relative to the bond as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondStereo {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub isotope: Option<u16>,
    pub charge: i8,
    /// Hydrogen count given inside a bracket atom; `None` for organic-subset atoms.
    pub explicit_h: Option<u8>,
    /// Total attached hydrogens that are not graph nodes.
    pub hydrogens: u8,
    pub aromatic: bool,
    /// Tetrahedral or other chirality marker as written (`@`, `@@`, `@TH1`, ...).
    pub chirality: Option<String>,
    pub atom_class: Option<u32>,
    pub index: usize,
}

impl Atom {
    pub fn bracket(&self) -> bool {
        self.explicit_h.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// A parsed molecule: atoms, bonds, and derived ring information.
#[derive(Debug, Clone)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
    rings: Vec<Vec<usize>>,
}

impl MolGraph {
    /// Builds the graph and its ring caches. Callers guarantee a simple graph.
    pub(crate) fn from_parts(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> MolGraph {
        for (i, atom) in atoms.iter_mut().enumerate() {
            atom.index = i;
        }
        let adjacency = build_adjacency(atoms.len(), &bonds);
        let ring_bond = rings::ring_bonds(&adjacency, bonds.len());
        let rings = rings::sssr(&adjacency, &ring_bond);
        MolGraph { atoms, bonds, adjacency, ring_bond, rings }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Smallest set of smallest rings, as atom-index cycles.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// `(neighbor, bond index)` pairs for an atom.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a].iter().find(|&&(w, _)| w == b).map(|&(_, e)| &self.bonds[e])
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.adjacency[atom].iter().any(|&(_, e)| self.ring_bond[e])
    }

    /// Connected components as sorted atom lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                for &(w, _) in &self.adjacency[comp[i]] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Sum of bond orders with aromatic bonds counted as 1.5, rounded down,
    /// plus attached hydrogens.
    pub fn valence(&self, atom: usize) -> u32 {
        let mut twice = 0u32;
        for &(_, e) in &self.adjacency[atom] {
            twice += match self.bonds[e].order {
                BondOrder::Single => 2,
                BondOrder::Double => 4,
                BondOrder::Triple => 6,
                BondOrder::Aromatic => 3,
            };
        }
        twice / 2 + self.atoms[atom].hydrogens as u32
    }
}

pub(crate) fn build_adjacency(n: usize, bonds: &[Bond]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (i, b) in bonds.iter().enumerate() {
        adj[b.a].push((b.b, i));
        adj[b.b].push((b.a, i));
    }
    adj
}
