//! Caption metrics (BLEU, ROUGE, METEOR) and string metrics for molecules
//! (Levenshtein, exact match).

mod bleu;
mod edit;
mod meteor;
pub mod porter;
mod rouge;

use serde::Serialize;
use thiserror::Error;

use crate::smiles::tokenize_smiles;

pub use bleu::bleu;
pub use edit::{exact_match, levenshtein};
pub use meteor::{meteor, sentence_meteor, MeteorParams};
pub use rouge::{rouge, RougeVariant};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{refs} references but {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },
    #[error("unsupported BLEU order {0}; expected 2 or 4")]
    BleuOrder(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Text,
    Smiles,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub origin: Origin,
}

impl TokenSequence {
    pub fn text(s: &str) -> TokenSequence {
        TokenSequence { tokens: tokenize_text(s), origin: Origin::Text }
    }

    pub fn smiles(s: &str) -> TokenSequence {
        TokenSequence { tokens: tokenize_smiles(s), origin: Origin::Smiles }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercase, split on whitespace, and emit every character that is neither
/// alphanumeric nor whitespace as its own token.
pub fn tokenize_text(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in s.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// A corpus-level value with optional per-example values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub metric: String,
    pub value: f64,
    pub per_example: Option<Vec<f64>>,
}

impl ScoreReport {
    fn from_examples(metric: impl Into<String>, per_example: Vec<f64>) -> ScoreReport {
        let value = per_example.iter().sum::<f64>() / per_example.len() as f64;
        ScoreReport { metric: metric.into(), value, per_example: Some(per_example) }
    }
}

fn check_lengths(refs: usize, hyps: usize) -> Result<(), TextError> {
    if refs != hyps {
        return Err(TextError::LengthMismatch { refs, hyps });
    }
    if refs == 0 {
        return Err(TextError::EmptyCorpus);
    }
    Ok(())
}
