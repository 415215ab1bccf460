//! Structural-key, linear-path and circular fingerprints with Tanimoto
//! similarity.

mod maccs;
mod morgan;
mod path;
mod pattern;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::hash::fnv1a64;
use crate::smiles::MolGraph;

pub use maccs::MACCS_BITS;
pub use morgan::morgan_environments;
pub use path::linear_paths;
pub use pattern::Pattern;

pub const DEFAULT_BITS: usize = 2048;
pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_PATH_LEN: u32 = 7;
pub const MAX_RADIUS: u32 = 10;
pub const MAX_PATH_LEN: u32 = 7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("cannot compare {0} fingerprint with {1} fingerprint")]
    Mismatch(FpKind, FpKind),
    #[error("bit width must be a positive power of two, got {0}")]
    BitWidth(usize),
    #[error("morgan radius must be at most {MAX_RADIUS}, got {0}")]
    Radius(u32),
    #[error("path length must be between 1 and {MAX_PATH_LEN}, got {0}")]
    PathLength(u32),
    #[error("no molecule pairs to score")]
    Empty,
    #[error("unknown fingerprint family {0:?}")]
    UnknownFamily(String),
}

/// Fixed-width bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> BitVec {
        BitVec { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    fn and_count(&self, other: &BitVec) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    fn or_count(&self, other: &BitVec) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Lowercase hex, byte `k` holding bits `8k..8k+8` with bit `8k` as the
    /// least significant.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = (0..self.len.div_ceil(8)).map(|k| (self.words[k / 8] >> (8 * (k % 8))) as u8).collect();
        hex::encode(bytes)
    }
}

/// Fingerprint family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FpKind {
    Maccs,
    Path { max_len: u32, bits: usize },
    Morgan { radius: u32, bits: usize },
}

impl FpKind {
    pub fn morgan(radius: u32, bits: usize) -> Result<FpKind, FingerprintError> {
        if radius > MAX_RADIUS {
            return Err(FingerprintError::Radius(radius));
        }
        check_width(bits)?;
        Ok(FpKind::Morgan { radius, bits })
    }

    pub fn path(max_len: u32, bits: usize) -> Result<FpKind, FingerprintError> {
        if !(1..=MAX_PATH_LEN).contains(&max_len) {
            return Err(FingerprintError::PathLength(max_len));
        }
        check_width(bits)?;
        Ok(FpKind::Path { max_len, bits })
    }

    pub fn family(&self) -> Family {
        match self {
            FpKind::Maccs => Family::Maccs,
            FpKind::Path { .. } => Family::Path,
            FpKind::Morgan { .. } => Family::Morgan,
        }
    }

    pub fn bit_width(&self) -> usize {
        match *self {
            FpKind::Maccs => MACCS_BITS,
            FpKind::Path { bits, .. } | FpKind::Morgan { bits, .. } => bits,
        }
    }

    pub fn compute(&self, mol: &MolGraph) -> Fingerprint {
        match *self {
            FpKind::Maccs => maccs_fp(mol),
            FpKind::Path { max_len, bits } => path_fp(mol, max_len, bits),
            FpKind::Morgan { radius, bits } => morgan_fp(mol, radius, bits),
        }
    }
}

impl fmt::Display for FpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FpKind::Maccs => write!(f, "maccs"),
            FpKind::Path { max_len, bits } => write!(f, "path(len={max_len}, bits={bits})"),
            FpKind::Morgan { radius, bits } => write!(f, "morgan(radius={radius}, bits={bits})"),
        }
    }
}

fn check_width(bits: usize) -> Result<(), FingerprintError> {
    if bits.is_power_of_two() {
        Ok(())
    } else {
        Err(FingerprintError::BitWidth(bits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Maccs,
    Path,
    Morgan,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Maccs, Family::Path, Family::Morgan];

    pub fn name(self) -> &'static str {
        match self {
            Family::Maccs => "maccs",
            Family::Path => "path",
            Family::Morgan => "morgan",
        }
    }

    /// The family with its default parameters.
    pub fn default_kind(self) -> FpKind {
        match self {
            Family::Maccs => FpKind::Maccs,
            Family::Path => FpKind::Path { max_len: DEFAULT_PATH_LEN, bits: DEFAULT_BITS },
            Family::Morgan => FpKind::Morgan { radius: DEFAULT_RADIUS, bits: DEFAULT_BITS },
        }
    }
}

impl FromStr for Family {
    type Err = FingerprintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "maccs" => Ok(Family::Maccs),
            "path" | "rdk" => Ok(Family::Path),
            "morgan" => Ok(Family::Morgan),
            _ => Err(FingerprintError::UnknownFamily(s.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub kind: FpKind,
    pub bits: BitVec,
}

impl Fingerprint {
    pub fn from_bits(kind: FpKind, bits: BitVec) -> Fingerprint {
        assert_eq!(bits.len(), kind.bit_width());
        Fingerprint { kind, bits }
    }
}

/// XOR-folds all 64 hash bits down to the power-of-two width.
fn fold(bits: &mut BitVec, hash: u64) {
    let k = bits.len().trailing_zeros();
    if k == 0 {
        bits.set(0);
        return;
    }
    let mask = (1u64 << k) - 1;
    let mut h = hash;
    let mut x = 0;
    while h != 0 {
        x ^= h & mask;
        h = h.checked_shr(k).unwrap_or(0);
    }
    bits.set(x as usize);
}

/// Circular fingerprint over environments up to `radius` bonds.
pub fn morgan_fp(mol: &MolGraph, radius: u32, bit_width: usize) -> Fingerprint {
    let kind = FpKind::morgan(radius, bit_width).expect("valid morgan parameters");
    let mut bits = BitVec::zeros(bit_width);
    for level in morgan_environments(mol, radius) {
        for id in level {
            fold(&mut bits, id);
        }
    }
    Fingerprint { kind, bits }
}

/// Hashed linear paths of up to `max_len` bonds, single atoms included.
pub fn path_fp(mol: &MolGraph, max_len: u32, bit_width: usize) -> Fingerprint {
    let kind = FpKind::path(max_len, bit_width).expect("valid path parameters");
    let mut bits = BitVec::zeros(bit_width);
    for p in linear_paths(mol, max_len) {
        fold(&mut bits, fnv1a64(p.as_bytes()));
    }
    Fingerprint { kind, bits }
}

pub fn maccs_fp(mol: &MolGraph) -> Fingerprint {
    Fingerprint { kind: FpKind::Maccs, bits: maccs::maccs_bits(mol) }
}

/// `|a ∧ b| / |a ∨ b|`, defined as 0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.kind != b.kind {
        return Err(FingerprintError::Mismatch(a.kind, b.kind));
    }
    let union = a.bits.or_count(&b.bits);
    if union == 0 {
        return Ok(0.0);
    }
    Ok(a.bits.and_count(&b.bits) as f64 / union as f64)
}

/// Per-pair similarities, in input order.
pub fn pair_similarities(pairs: &[(MolGraph, MolGraph)], kind: FpKind) -> Vec<f64> {
    pairs.par_iter().map(|(gt, pred)| tanimoto(&kind.compute(gt), &kind.compute(pred)).expect("same kind")).collect()
}

/// Mean Tanimoto similarity over pairs.
pub fn fts_batch(pairs: &[(MolGraph, MolGraph)], kind: FpKind) -> Result<f64, FingerprintError> {
    if pairs.is_empty() {
        return Err(FingerprintError::Empty);
    }
    let sims = pair_similarities(pairs, kind);
    Ok(sims.iter().sum::<f64>() / sims.len() as f64)
}
