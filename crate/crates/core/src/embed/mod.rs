//! Embedding-space metrics over externally computed vectors: mean cosine
//! similarity of paired embeddings (Text2Mol) and the Fréchet distance
//! between Gaussians fit to two embedding sets (FCD).

pub mod linalg;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use linalg::{singular_values, sqrt_psd, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("covariance is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("no valid pairs")]
    NoValidPairs,
}

fn parse_error(line: usize, message: impl Into<String>) -> EmbedError {
    EmbedError::Parse { line, message: message.into() }
}

/// Id-keyed vectors of one fixed dimension, kept in insertion order.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> EmbeddingTable {
        EmbeddingTable { dim, ..Default::default() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<(), EmbedError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(EmbedError::Dimension(self.dim, vector.len()));
        }
        if !vector.iter().all(|x| x.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        if self.index.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.vectors.iter().map(Vec::as_slice))
    }

    /// Parses the text format: a `#dim D` header line, then one
    /// `id<TAB>v1 v2 … vD` record per line. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<EmbeddingTable, EmbedError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) =
            lines.find(|(_, l)| !l.trim().is_empty()).ok_or_else(|| parse_error(1, "missing `#dim D` header"))?;
        let dim = header
            .trim()
            .strip_prefix("#dim")
            .and_then(|d| d.trim().parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_error(1, format!("bad header {header:?}, expected `#dim D`")))?;

        let mut table = EmbeddingTable::new(dim);
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (id, values) = line.split_once('\t').ok_or_else(|| parse_error(n, "expected `id<TAB>values`"))?;
            let vector = values
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| parse_error(n, format!("bad number {v:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            table.insert(id, vector).map_err(|e| match e {
                EmbedError::Dimension(want, got) => parse_error(n, format!("expected {want} values, found {got}")),
                other => parse_error(n, other.to_string()),
            })?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<EmbeddingTable, EmbedError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EmbedError::Io { path: path.display().to_string(), message: e.to_string() })?;
        EmbeddingTable::parse(&text)
    }

    /// Serializes in the format read by [`EmbeddingTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("#dim {}\n", self.dim);
        for (id, v) in self.iter() {
            out.push_str(id);
            for (i, x) in v.iter().enumerate() {
                out.push(if i == 0 { '\t' } else { ' ' });
                write!(out, "{x:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Cosine similarity, or `None` when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Text2MolReport {
    /// Mean cosine over the pairs that were scored.
    pub mean: f64,
    /// `None` marks a pair excluded for containing a zero vector.
    pub per_pair: Vec<Option<f64>>,
    pub excluded: usize,
}

/// Mean cosine similarity between paired embeddings.
pub fn text2mol_score(pairs: &[(&[f64], &[f64])]) -> Result<Text2MolReport, EmbedError> {
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        if a.len() != b.len() {
            return Err(EmbedError::Dimension(a.len(), b.len()));
        }
        per_pair.push(cosine(a, b));
    }
    let scored: Vec<f64> = per_pair.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(EmbedError::NoValidPairs);
    }
    Ok(Text2MolReport {
        mean: scored.iter().sum::<f64>() / scored.len() as f64,
        excluded: per_pair.len() - scored.len(),
        per_pair,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub sample_count: usize,
}

impl GaussianSummary {
    /// Sample mean and unbiased covariance, by two passes over `rows`.
    pub fn fit(rows: &[&[f64]]) -> Result<GaussianSummary, EmbedError> {
        let n = rows.len();
        if n < 2 {
            return Err(EmbedError::TooFewSamples(n));
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(EmbedError::Dimension(dim, bad.len()));
        }
        if !rows.iter().all(|r| r.iter().all(|x| x.is_finite())) {
            return Err(EmbedError::NonFinite);
        }

        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(*r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let mut cov = Matrix::zeros(dim);
        let mut centered = vec![0.0; dim];
        for r in rows {
            for (c, (x, m)) in centered.iter_mut().zip(r.iter().zip(&mean)) {
                *c = x - m;
            }
            for i in 0..dim {
                let ci = centered[i];
                for j in i..dim {
                    cov[(i, j)] += ci * centered[j];
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..dim {
            for j in i..dim {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(GaussianSummary { mean, covariance: cov, sample_count: n })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn fit_gaussian(table: &EmbeddingTable) -> Result<GaussianSummary, EmbedError> {
    let rows: Vec<&[f64]> = table.iter().map(|(_, v)| v).collect();
    GaussianSummary::fit(&rows)
}

/// `‖μa−μb‖² + Tr(Σa + Σb − 2(Σa Σb)^½)`.
///
/// The cross term `Tr (Σa Σb)^½` equals the trace of `(Σa^½ Σb Σa^½)^½`,
/// i.e. the nuclear norm of `Σa^½ Σb^½`; it is summed from the singular values
/// of that product so that near-singular covariances keep full precision.
pub fn frechet_distance(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::Dimension(a.dim(), b.dim()));
    }
    let finite = |g: &GaussianSummary| g.mean.iter().all(|x| x.is_finite()) && g.covariance.is_finite();
    if !finite(a) || !finite(b) {
        return Err(EmbedError::NonFinite);
    }
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y) * (x - y)).sum();
    let root_a = sqrt_psd(&a.covariance).map_err(EmbedError::NotPsd)?;
    let root_b = sqrt_psd(&b.covariance).map_err(EmbedError::NotPsd)?;
    let cross: f64 = singular_values(&root_a.matmul(&root_b)).iter().sum();
    let d = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    Ok(d.max(0.0))
}
