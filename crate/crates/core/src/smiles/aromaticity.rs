//! Valence helpers shared by the parser and writer, and ring-based
//! aromaticity perception on a Kekulé structure.
//!
//! A ring is aromatic when every member is sp2-capable and the ring holds
//! 4n+2 pi electrons. Rings are taken from the shortest cycles through each
//! ring bond; pairs of rings fused on one bond are also tested as a single
//! perimeter (this catches azulene-like systems).

use std::collections::HashSet;

use super::element::Element;
use super::graph::{Atom, Bond, BondOrder};
use super::rings;

pub(crate) fn lowest_valence_at_least(element: Element, charge: i32, sum: u32) -> Option<u32> {
    element.valences(charge).into_iter().map(u32::from).find(|&v| v >= sum)
}

/// Whether an aromatic atom with the given non-pi bond sum must take one
/// double bond when kekulized.
pub(crate) fn needs_pi_bond(element: Element, charge: i32, base: u32) -> bool {
    lowest_valence_at_least(element, charge, base).is_some_and(|v| base < v)
}

/// Implicit hydrogen count the organic-subset reading would assign.
pub(crate) fn organic_implicit_h(element: Element, aromatic: bool, base: u32) -> Option<u32> {
    let sum = if aromatic && needs_pi_bond(element, 0, base) { base + 1 } else { base };
    lowest_valence_at_least(element, 0, sum).map(|v| v - sum)
}

/// Whether `atom` can be written without brackets given its bond sum (aromatic
/// bonds counted as 1). Stereo markers are not written, so they do not matter.
pub(crate) fn organic_writable(atom: &Atom, base: u32) -> bool {
    atom.element.is_organic_subset()
        && atom.isotope.is_none()
        && atom.charge == 0
        && atom.atom_class.is_none()
        && (!atom.aromatic || atom.element.is_aromatic_capable())
        && organic_implicit_h(atom.element, atom.aromatic, base) == Some(atom.hydrogens as u32)
}

/// The pi-bond requirement a reader will infer for an aromatic atom as the
/// writer will emit it.
pub(crate) fn written_need(atom: &Atom, base: u32) -> bool {
    if organic_writable(atom, base) {
        needs_pi_bond(atom.element, 0, base)
    } else {
        needs_pi_bond(atom.element, atom.charge as i32, base + atom.hydrogens as u32)
    }
}

fn order_value(order: BondOrder) -> u32 {
    match order {
        BondOrder::Single | BondOrder::Aromatic => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
    }
}

/// Pi electrons an atom donates to a ring, or `None` if it cannot be part of
/// an aromatic ring.
fn pi_contribution(atom: &Atom, adj: &[(usize, usize)], bonds: &[Bond], ring: &[bool]) -> Option<u32> {
    if !atom.element.is_aromatic_capable() {
        return None;
    }
    let mut doubles = 0;
    let mut ring_double = false;
    for &(_, e) in adj {
        match bonds[e].order {
            BondOrder::Triple => return None,
            BondOrder::Double => {
                doubles += 1;
                ring_double |= ring[e];
            }
            _ => {}
        }
    }
    match doubles {
        0 => {}
        1 if ring_double => return Some(1),
        1 => return Some(0),
        _ => return None,
    }
    let connections = adj.len() as u32 + atom.hydrogens as u32;
    let z = atom.element.atomic_number();
    match (z, atom.charge, connections) {
        (7 | 15 | 33, 0, 3) => Some(2),
        (7 | 15 | 33, -1, 2) => Some(2),
        (8 | 16 | 34, 0, 2) => Some(2),
        (6, -1, 3) => Some(2),
        (6, 1, 3) => Some(0),
        (5, 0, 3) => Some(0),
        _ => None,
    }
}

struct AromaticUnit {
    atoms: Vec<usize>,
    bonds: Vec<usize>,
}

/// Marks aromatic atoms and bonds. `bonds` must carry Kekulé orders on entry
/// and `atoms` must have hydrogen counts set.
pub(crate) fn perceive(atoms: &mut [Atom], bonds: &mut [Bond], adj: &[Vec<(usize, usize)>], ring: &[bool]) {
    for atom in atoms.iter_mut() {
        atom.aromatic = false;
    }
    let cycles = rings::shortest_cycles_per_bond(adj, ring);
    if cycles.is_empty() {
        return;
    }
    let pi: Vec<Option<u32>> = (0..atoms.len()).map(|i| pi_contribution(&atoms[i], &adj[i], bonds, ring)).collect();

    let bond_of = |a: usize, b: usize| -> usize { adj[a].iter().find(|&&(w, _)| w == b).map(|&(_, e)| e).unwrap() };
    let cycle_bonds =
        |c: &[usize]| -> Vec<usize> { (0..c.len()).map(|i| bond_of(c[i], c[(i + 1) % c.len()])).collect() };
    let huckel = |members: &[usize]| -> bool {
        let mut total = 0;
        for &a in members {
            match pi[a] {
                Some(p) => total += p,
                None => return false,
            }
        }
        total % 4 == 2
    };

    let mut units: Vec<AromaticUnit> = Vec::new();
    let mut single_ok = vec![false; cycles.len()];
    for (i, c) in cycles.iter().enumerate() {
        if huckel(c) {
            single_ok[i] = true;
            units.push(AromaticUnit { atoms: c.clone(), bonds: cycle_bonds(c) });
        }
    }
    // Two rings fused on exactly one bond, tested as one perimeter.
    for i in 0..cycles.len() {
        for j in i + 1..cycles.len() {
            if single_ok[i] && single_ok[j] {
                continue;
            }
            let si: HashSet<usize> = cycles[i].iter().copied().collect();
            let shared: Vec<usize> = cycles[j].iter().copied().filter(|a| si.contains(a)).collect();
            if shared.len() != 2 || bonds_between(adj, shared[0], shared[1]).is_none() {
                continue;
            }
            let mut union: Vec<usize> = cycles[i].clone();
            union.extend(cycles[j].iter().copied().filter(|a| !si.contains(a)));
            if huckel(&union) {
                let mut ub = cycle_bonds(&cycles[i]);
                ub.extend(cycle_bonds(&cycles[j]));
                ub.sort_unstable();
                ub.dedup();
                units.push(AromaticUnit { atoms: union, bonds: ub });
            }
        }
    }
    if units.is_empty() {
        return;
    }

    let kekule: Vec<BondOrder> = bonds.iter().map(|b| b.order).collect();
    let mut blocked: HashSet<usize> = HashSet::new();
    loop {
        let mut atom_flag = vec![false; atoms.len()];
        let mut bond_flag = vec![false; bonds.len()];
        for unit in &units {
            if unit.atoms.iter().any(|a| blocked.contains(a)) {
                continue;
            }
            unit.atoms.iter().for_each(|&a| atom_flag[a] = true);
            unit.bonds.iter().for_each(|&b| bond_flag[b] = true);
        }
        for (i, atom) in atoms.iter_mut().enumerate() {
            atom.aromatic = atom_flag[i];
        }
        let mut changed = false;
        for i in 0..atoms.len() {
            if !atom_flag[i] {
                continue;
            }
            let mut base = 0;
            let mut pi_on_aromatic = false;
            for &(_, e) in &adj[i] {
                if bond_flag[e] {
                    base += 1;
                    pi_on_aromatic |= kekule[e] == BondOrder::Double;
                } else {
                    base += order_value(kekule[e]);
                }
            }
            if written_need(&atoms[i], base) != pi_on_aromatic && blocked.insert(i) {
                changed = true;
            }
        }
        if !changed {
            for (e, bond) in bonds.iter_mut().enumerate() {
                bond.order = if bond_flag[e] { BondOrder::Aromatic } else { kekule[e] };
            }
            return;
        }
    }
}

fn bonds_between(adj: &[Vec<(usize, usize)>], a: usize, b: usize) -> Option<usize> {
    adj[a].iter().find(|&&(w, _)| w == b).map(|&(_, e)| e)
}
