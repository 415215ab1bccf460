use std::collections::BTreeSet;

use crate::smiles::MolGraph;

fn atom_token(mol: &MolGraph, atom: usize) -> String {
    let a = &mol.atoms()[atom];
    if a.aromatic {
        a.element.symbol().to_ascii_lowercase()
    } else {
        a.element.symbol().to_string()
    }
}

/// Every simple path with `0..=max_len` bonds, as a direction-normalized
/// string of alternating atom and bond symbols.
pub fn linear_paths(mol: &MolGraph, max_len: u32) -> BTreeSet<String> {
    let tokens: Vec<String> = (0..mol.atom_count()).map(|i| atom_token(mol, i)).collect();
    let mut out = BTreeSet::new();
    let mut atoms = Vec::new();
    let mut bonds = Vec::new();
    for start in 0..mol.atom_count() {
        atoms.push(start);
        walk(mol, &tokens, max_len as usize, &mut atoms, &mut bonds, &mut out);
        atoms.pop();
    }
    out
}

fn walk(
    mol: &MolGraph,
    tokens: &[String],
    max_len: usize,
    atoms: &mut Vec<usize>,
    bonds: &mut Vec<usize>,
    out: &mut BTreeSet<String>,
) {
    out.insert(path_string(mol, tokens, atoms, bonds));
    if bonds.len() == max_len {
        return;
    }
    let last = *atoms.last().unwrap();
    for &(w, e) in mol.neighbors(last) {
        if atoms.contains(&w) {
            continue;
        }
        atoms.push(w);
        bonds.push(e);
        walk(mol, tokens, max_len, atoms, bonds, out);
        atoms.pop();
        bonds.pop();
    }
}

fn path_string(mol: &MolGraph, tokens: &[String], atoms: &[usize], bonds: &[usize]) -> String {
    let render = |atom_seq: &mut dyn Iterator<Item = usize>, bond_seq: &mut dyn Iterator<Item = usize>| {
        let mut s = String::new();
        for (k, a) in atom_seq.enumerate() {
            if k > 0 {
                s.push_str(mol.bonds()[bond_seq.next().unwrap()].order.symbol());
            }
            s.push_str(&tokens[a]);
        }
        s
    };
    let forward = render(&mut atoms.iter().copied(), &mut bonds.iter().copied());
    let backward = render(&mut atoms.iter().rev().copied(), &mut bonds.iter().rev().copied());
    forward.min(backward)
}
