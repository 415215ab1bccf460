use super::aromaticity::organic_writable;
use super::graph::{BondOrder, MolGraph};

/// Write `mol` as SMILES, visiting atoms in ascending `priority`.
///
/// Each component starts at its lowest-priority atom; neighbors are explored
/// in priority order and all but the last child become branches. Chirality
/// and bond direction markers are not emitted.
/// Depth-first frame: atom, its ordered `(neighbor, bond)` list, next slot.
type Frame = (usize, Vec<(usize, usize)>, usize);

pub fn write_smiles(mol: &MolGraph, priority: &[usize]) -> String {
    assert_eq!(priority.len(), mol.atom_count());
    let plan = Plan::build(mol, priority);
    let mut out = String::new();
    let mut digits = Digits::default();
    let mut open_at: Vec<Option<usize>> = vec![None; mol.bonds().len()];
    for (i, &root) in plan.roots.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        write_atom(mol, &plan, root, None, &mut out, &mut digits, &mut open_at);
    }
    out
}

struct Plan {
    roots: Vec<usize>,
    children: Vec<Vec<(usize, usize)>>,
    closures: Vec<Vec<(usize, usize)>>,
    visit: Vec<usize>,
}

impl Plan {
    fn build(mol: &MolGraph, priority: &[usize]) -> Plan {
        let n = mol.atom_count();
        let mut visit = vec![usize::MAX; n];
        let mut children = vec![Vec::new(); n];
        let mut closures = vec![Vec::new(); n];
        let mut classified = vec![false; mol.bonds().len()];
        let mut roots = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| priority[i]);
        let mut counter = 0;

        for &start in &order {
            if visit[start] != usize::MAX {
                continue;
            }
            roots.push(start);
            visit[start] = counter;
            counter += 1;
            let mut stack: Vec<Frame> = vec![(start, sorted_neighbors(mol, start, priority), 0)];
            while let Some((u, nbrs, slot)) = stack.last_mut() {
                let u = *u;
                if *slot == nbrs.len() {
                    stack.pop();
                    continue;
                }
                let (v, e) = nbrs[*slot];
                *slot += 1;
                if classified[e] {
                    continue;
                }
                classified[e] = true;
                if visit[v] == usize::MAX {
                    visit[v] = counter;
                    counter += 1;
                    children[u].push((v, e));
                    stack.push((v, sorted_neighbors(mol, v, priority), 0));
                } else {
                    closures[u].push((v, e));
                    closures[v].push((u, e));
                }
            }
        }
        Plan { roots, children, closures, visit }
    }
}

fn sorted_neighbors(mol: &MolGraph, atom: usize, priority: &[usize]) -> Vec<(usize, usize)> {
    let mut v = mol.neighbors(atom).to_vec();
    v.sort_by_key(|&(w, _)| priority[w]);
    v
}

#[derive(Default)]
struct Digits {
    in_use: Vec<bool>,
}

impl Digits {
    fn take(&mut self) -> usize {
        for d in 1.. {
            if self.in_use.len() <= d {
                self.in_use.resize(d + 1, false);
            }
            if !self.in_use[d] {
                self.in_use[d] = true;
                return d;
            }
        }
        unreachable!()
    }

    fn release(&mut self, d: usize) {
        self.in_use[d] = false;
    }
}

fn label(d: usize) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

fn bond_text(mol: &MolGraph, bond: usize) -> &'static str {
    let b = &mol.bonds()[bond];
    let both_aromatic = mol.atoms()[b.a].aromatic && mol.atoms()[b.b].aromatic;
    match b.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

/// Bond sum with aromatic bonds counted as one, as a reader sees it.
fn written_base(mol: &MolGraph, atom: usize) -> u32 {
    mol.neighbors(atom)
        .iter()
        .map(|&(_, e)| match mol.bonds()[e].order {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        })
        .sum()
}

pub(crate) fn atom_text(mol: &MolGraph, atom: usize) -> String {
    let a = &mol.atoms()[atom];
    let symbol = if a.aromatic { a.element.symbol().to_ascii_lowercase() } else { a.element.symbol().to_string() };
    if organic_writable(a, written_base(mol, atom)) {
        return symbol;
    }
    let mut s = String::from("[");
    if let Some(iso) = a.isotope {
        s.push_str(&iso.to_string());
    }
    s.push_str(&symbol);
    match a.hydrogens {
        0 => {}
        1 => s.push('H'),
        n => s.push_str(&format!("H{n}")),
    }
    match a.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        q if q > 0 => s.push_str(&format!("+{q}")),
        q => s.push_str(&format!("-{}", -q)),
    }
    if let Some(class) = a.atom_class {
        s.push_str(&format!(":{class}"));
    }
    s.push(']');
    s
}

fn write_atom(
    mol: &MolGraph,
    plan: &Plan,
    atom: usize,
    in_bond: Option<usize>,
    out: &mut String,
    digits: &mut Digits,
    open_at: &mut Vec<Option<usize>>,
) {
    if let Some(e) = in_bond {
        out.push_str(bond_text(mol, e));
    }
    out.push_str(&atom_text(mol, atom));

    let mut closing: Vec<(usize, usize)> = Vec::new();
    let mut opening: Vec<(usize, usize)> = Vec::new();
    for &(partner, e) in &plan.closures[atom] {
        if plan.visit[partner] < plan.visit[atom] {
            closing.push((partner, e));
        } else {
            opening.push((partner, e));
        }
    }
    closing.sort_by_key(|&(p, _)| plan.visit[p]);
    opening.sort_by_key(|&(p, _)| plan.visit[p]);
    let mut freed = Vec::new();
    for &(_, e) in &closing {
        let d = open_at[e].take().expect("ring opened before closing");
        out.push_str(&label(d));
        freed.push(d);
    }
    for &(_, e) in &opening {
        let d = digits.take();
        out.push_str(bond_text(mol, e));
        out.push_str(&label(d));
        open_at[e] = Some(d);
    }
    for d in freed {
        digits.release(d);
    }

    let kids = &plan.children[atom];
    for (i, &(child, e)) in kids.iter().enumerate() {
        let last = i + 1 == kids.len();
        if !last {
            out.push('(');
        }
        write_atom(mol, plan, child, Some(e), out, digits, open_at);
        if !last {
            out.push(')');
        }
    }
}
