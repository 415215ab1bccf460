//! Canonical SMILES via iterative invariant refinement.
//!
//! Atoms start from a tuple invariant (element, isotope, charge, hydrogens,
//! aromaticity, degree, ring membership) and are refined by the sorted
//! multiset of `(bond order, neighbor class)` until the partition is stable.
//! Remaining ties are broken by individualizing each member of the first tied
//! class in turn; the lexicographically smallest SMILES over all leaves wins.

use super::graph::MolGraph;
use super::parser::{parse, ParseError};
use super::writer::write_smiles;

/// Leaves explored before the search settles for the best string so far.
const LEAF_BUDGET: usize = 4096;

pub fn canonicalize(mol: &MolGraph) -> String {
    if mol.atom_count() == 0 {
        return String::new();
    }
    let ranks = refine(mol, initial_ranks(mol));
    let mut search = Search { mol, best: None, leaves: 0 };
    search.explore(ranks);
    search.best.expect("at least one leaf")
}

/// Parse then canonicalize.
pub fn canonical_smiles(smiles: &str) -> Result<String, ParseError> {
    parse(smiles).map(|m| canonicalize(&m))
}

/// Final atom ranks of the stable partition before tie breaking.
pub fn symmetry_classes(mol: &MolGraph) -> Vec<usize> {
    refine(mol, initial_ranks(mol))
}

fn initial_ranks(mol: &MolGraph) -> Vec<usize> {
    let keys: Vec<_> = (0..mol.atom_count())
        .map(|i| {
            let a = &mol.atoms()[i];
            (
                a.element.atomic_number(),
                a.isotope.unwrap_or(0),
                a.charge,
                a.hydrogens,
                a.aromatic,
                mol.degree(i),
                mol.is_ring_atom(i),
                a.atom_class.unwrap_or(0),
            )
        })
        .collect();
    dense_ranks(&keys)
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

fn refine(mol: &MolGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    ranks = dense_ranks(&ranks);
    loop {
        let before = class_count(&ranks);
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nbrs: Vec<(usize, u8)> =
                    mol.neighbors(i).iter().map(|&(w, e)| (ranks[w], mol.bonds()[e].order.code())).collect();
                nbrs.sort_unstable();
                (ranks[i], nbrs)
            })
            .collect();
        ranks = dense_ranks(&keys);
        if class_count(&ranks) == before {
            return ranks;
        }
    }
}

struct Search<'a> {
    mol: &'a MolGraph,
    best: Option<String>,
    leaves: usize,
}

impl Search<'_> {
    fn explore(&mut self, ranks: Vec<usize>) {
        let n = ranks.len();
        if class_count(&ranks) == n {
            self.leaves += 1;
            let s = write_smiles(self.mol, &ranks);
            if self.best.as_ref().is_none_or(|b| s < *b) {
                self.best = Some(s);
            }
            return;
        }
        let mut sizes = vec![0usize; n];
        for &r in &ranks {
            sizes[r] += 1;
        }
        let target = (0..n).find(|&r| sizes[r] > 1).expect("a tied class");
        let members: Vec<usize> = (0..n).filter(|&i| ranks[i] == target).collect();

        // Terminal atoms on the same neighbor through the same bond order are
        // interchangeable; exploring one of them is enough.
        let mut seen_leaf: Vec<(usize, u8)> = Vec::new();
        let mut candidates = Vec::new();
        for &m in &members {
            if self.mol.degree(m) == 1 {
                let (w, e) = self.mol.neighbors(m)[0];
                let key = (w, self.mol.bonds()[e].order.code());
                if seen_leaf.contains(&key) {
                    continue;
                }
                seen_leaf.push(key);
            }
            candidates.push(m);
        }

        for c in candidates {
            if self.leaves >= LEAF_BUDGET && self.best.is_some() {
                return;
            }
            let split: Vec<usize> =
                ranks.iter().enumerate().map(|(i, &r)| 2 * r + usize::from(r == target && i != c)).collect();
            self.explore(refine(self.mol, split));
        }
    }
}
