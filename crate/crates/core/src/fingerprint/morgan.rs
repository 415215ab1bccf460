use std::collections::BTreeSet;

use crate::hash::Fnv64;
use crate::smiles::MolGraph;

/// Distinct environment identifiers per radius, from 0 to `radius`.
///
/// Level 0 hashes `(atomic number, degree, hydrogens, charge, isotope, in
/// ring)`; each further level hashes the previous identifier with the sorted
/// `(bond code, neighbor identifier)` pairs.
pub fn morgan_environments(mol: &MolGraph, radius: u32) -> Vec<BTreeSet<u64>> {
    let n = mol.atom_count();
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = &mol.atoms()[i];
            let mut h = Fnv64::default();
            h.write(&[
                a.element.atomic_number(),
                mol.degree(i) as u8,
                a.hydrogens,
                a.charge as u8,
                u8::from(mol.is_ring_atom(i)),
            ]);
            h.write(&a.isotope.unwrap_or(0).to_le_bytes());
            h.finish()
        })
        .collect();
    let mut levels = vec![ids.iter().copied().collect::<BTreeSet<_>>()];
    for r in 1..=radius {
        ids = (0..n)
            .map(|i| {
                let mut nbrs: Vec<(u8, u64)> =
                    mol.neighbors(i).iter().map(|&(w, e)| (mol.bonds()[e].order.code(), ids[w])).collect();
                nbrs.sort_unstable();
                let mut h = Fnv64::default();
                h.write_u64(u64::from(r));
                h.write_u64(ids[i]);
                for (code, id) in nbrs {
                    h.write(&[code]);
                    h.write_u64(id);
                }
                h.finish()
            })
            .collect();
        levels.push(ids.iter().copied().collect());
    }
    levels
}
