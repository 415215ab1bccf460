#![allow(dead_code)]

use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

const CORPUS: &str = include_str!("../data/molecules.smi");

pub fn corpus() -> Vec<&'static str> {
    CORPUS.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

pub fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

pub fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        v.swap(i, below(rng, i + 1));
    }
    v
}

/// Uniform in [0, 1) with 53 random bits.
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = 1.0 - uniform(rng);
    let v = uniform(rng);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Small random molecule as (symbols, bonds with order 1..=3).
pub struct RandomMol {
    pub symbols: Vec<&'static str>,
    pub bonds: Vec<(usize, usize, u8)>,
}

fn capacity(symbol: &str) -> u8 {
    match symbol {
        "C" => 4,
        "N" => 3,
        "O" | "S" => 2,
        _ => 1,
    }
}

pub fn random_molecule(rng: &mut ChaCha8Rng) -> RandomMol {
    const POOL: [&str; 10] = ["C", "C", "C", "C", "C", "N", "N", "O", "S", "Cl"];
    let n = 1 + below(rng, 8);
    let mut symbols = Vec::new();
    let mut bonds: Vec<(usize, usize, u8)> = Vec::new();
    let mut used = vec![0u8; n];

    // Sometimes seed with a conjugated ring so aromaticity gets exercised.
    let ring = if n >= 5 && below(rng, 3) == 0 { 5 + below(rng, 2).min(n - 5) } else { 0 };
    for i in 0..n {
        if i < ring {
            symbols.push(if ring == 5 && i == 0 { ["N", "O", "S"][below(rng, 3)] } else { "C" });
        } else {
            symbols.push(POOL[below(rng, POOL.len())]);
        }
    }
    if ring > 0 {
        for i in 0..ring {
            let j = (i + 1) % ring;
            let order = if ring == 6 {
                if i % 2 == 0 {
                    2
                } else {
                    1
                }
            } else if i == 1 || i == 3 {
                2
            } else {
                1
            };
            bonds.push((i, j, order));
            used[i] += order;
            used[j] += order;
        }
    }
    for i in ring.max(1)..n {
        let choices: Vec<usize> = (0..i).filter(|&j| used[j] < capacity(symbols[j])).collect();
        if choices.is_empty() || capacity(symbols[i]) == 0 {
            continue;
        }
        let j = choices[below(rng, choices.len())];
        let room = (capacity(symbols[i]) - used[i]).min(capacity(symbols[j]) - used[j]);
        let order = if room >= 2 && below(rng, 4) == 0 { 2 + below(rng, (room - 1).min(2) as usize) as u8 } else { 1 };
        bonds.push((j, i, order));
        used[i] += order;
        used[j] += order;
    }
    for _ in 0..below(rng, 3) {
        let a = below(rng, n);
        let b = below(rng, n);
        if a == b || bonds.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a)) {
            continue;
        }
        if used[a] < capacity(symbols[a]) && used[b] < capacity(symbols[b]) {
            bonds.push((a, b, 1));
            used[a] += 1;
            used[b] += 1;
        }
    }
    RandomMol { symbols, bonds }
}

/// Writes every bond as a ring closure, with atoms in `order` separated by
/// dots. Independent of the library writer.
pub fn closure_smiles(mol: &RandomMol, order: &[usize], rng: &mut ChaCha8Rng) -> String {
    let labels = shuffled(rng, mol.bonds.len());
    let mut out = String::new();
    for (k, &atom) in order.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        out.push_str(mol.symbols[atom]);
        for (bi, &(a, b, order)) in mol.bonds.iter().enumerate() {
            if a == atom || b == atom {
                out.push_str(["", "", "=", "#"][order as usize]);
                let l = labels[bi] + 1;
                if l < 10 {
                    out.push_str(&l.to_string());
                } else {
                    out.push_str(&format!("%{l:02}"));
                }
            }
        }
    }
    out
}
