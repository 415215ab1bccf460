//! Span corruption for denoising pretraining: contiguous token spans are
//! replaced by sentinel tokens in the input, and the target lists the
//! dropped spans, each introduced by its sentinel.
//!
//! Randomness comes from ChaCha8 streams. The stream for example `e` of
//! batch `b` in epoch `p` is seeded with
//! `mix(mix(mix(seed, p), b), e)` where `mix(s, x) = splitmix64(s ^ splitmix64(x))`,
//! so every example can be reproduced on its own.

use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::smiles::tokenize_smiles;
use crate::text::Origin;

#[derive(Debug, Error, PartialEq)]
pub enum CorruptError {
    #[error("sequence of {0} tokens is too short to corrupt")]
    TooShort(usize),
    #[error("sequence of {len} tokens exceeds the limit of {max}")]
    TooLong { len: usize, max: usize },
    #[error("{needed} sentinels needed but only {available} configured")]
    SentinelBudget { needed: usize, available: usize },
    #[error("input token {0:?} collides with the sentinel vocabulary")]
    SentinelCollision(String),
    #[error("sentinel mismatch: {0}")]
    SentinelMismatch(String),
    #[error("{0} stream exhausted")]
    StreamExhausted(&'static str),
    #[error("batch size must be even and positive, got {0}")]
    BatchSize(usize),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionConfig {
    pub corruption_rate: f64,
    pub mean_span_length: f64,
    pub n_sentinels: usize,
    pub seed: u64,
    pub max_seq_len: usize,
}

impl Default for CorruptionConfig {
    fn default() -> CorruptionConfig {
        CorruptionConfig { corruption_rate: 0.15, mean_span_length: 3.0, n_sentinels: 100, seed: 0, max_seq_len: 512 }
    }
}

impl CorruptionConfig {
    pub fn validate(&self) -> Result<(), CorruptError> {
        if !(self.corruption_rate > 0.0 && self.corruption_rate < 1.0) {
            return Err(CorruptError::Config("corruption rate must lie in (0, 1)"));
        }
        if !(self.mean_span_length > 0.0 && self.mean_span_length.is_finite()) {
            return Err(CorruptError::Config("mean span length must be positive"));
        }
        if self.n_sentinels == 0 || self.max_seq_len == 0 {
            return Err(CorruptError::Config("sentinel count and max length must be positive"));
        }
        Ok(())
    }
}

pub fn sentinel(i: usize) -> String {
    format!("<extra_id_{i}>")
}

/// Index of a sentinel token, if `token` is one.
pub fn sentinel_index(token: &str) -> Option<usize> {
    let digits = token.strip_prefix("<extra_id_")?.strip_suffix('>')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptionExample {
    pub input_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
    pub source_modality: Origin,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one example; see the module docs for the derivation.
pub fn example_rng(seed: u64, epoch: u64, batch: u64, example: u64) -> ChaCha8Rng {
    let mix = |s: u64, x: u64| splitmix64(s ^ splitmix64(x));
    ChaCha8Rng::seed_from_u64(mix(mix(mix(seed, epoch), batch), example))
}

/// Uniform integer in `0..n` by rejection, so the result is unbiased.
fn below(rng: &mut impl RngCore, n: u64) -> u64 {
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

/// Uniformly random composition of `total` into `parts` positive integers.
fn composition(rng: &mut impl RngCore, total: usize, parts: usize) -> Vec<usize> {
    debug_assert!(parts >= 1 && total >= parts);
    // Floyd's sampling of parts-1 distinct cut points from 1..total.
    let mut cuts = BTreeSet::new();
    let n = total - 1;
    for j in n - (parts - 1)..n {
        let t = below(rng, j as u64 + 1) as usize + 1;
        if !cuts.insert(t) {
            cuts.insert(j + 1);
        }
    }
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

/// Corrupted token count and span count for a sequence of `len` tokens.
pub fn span_plan(len: usize, config: &CorruptionConfig) -> (usize, usize) {
    let noise = ((config.corruption_rate * len as f64).round() as usize).min(len - 1);
    if noise == 0 {
        return (0, 0);
    }
    let spans = ((noise as f64 / config.mean_span_length).round() as usize).clamp(1, noise).min(len - noise + 1);
    (noise, spans)
}

pub fn corrupt(
    tokens: &[String],
    modality: Origin,
    config: &CorruptionConfig,
    rng: &mut impl RngCore,
) -> Result<CorruptionExample, CorruptError> {
    config.validate()?;
    let len = tokens.len();
    if len < 2 {
        return Err(CorruptError::TooShort(len));
    }
    if len > config.max_seq_len {
        return Err(CorruptError::TooLong { len, max: config.max_seq_len });
    }
    if let Some(t) = tokens.iter().find(|t| sentinel_index(t).is_some()) {
        return Err(CorruptError::SentinelCollision(t.clone()));
    }
    let (noise, spans) = span_plan(len, config);
    if spans + 1 > config.n_sentinels {
        return Err(CorruptError::SentinelBudget { needed: spans + 1, available: config.n_sentinels });
    }

    let mut input = Vec::with_capacity(len - noise + spans);
    let mut target = Vec::with_capacity(noise + spans + 1);
    if spans == 0 {
        input.extend_from_slice(tokens);
    } else {
        let span_lengths = composition(rng, noise, spans);
        // Kept tokens split into spans+1 gaps: inner gaps at least 1, outer
        // gaps possibly empty (shift both outer gaps by one and compose).
        let mut gaps = composition(rng, len - noise + 2, spans + 1);
        gaps[0] -= 1;
        gaps[spans] -= 1;

        let mut pos = 0;
        for (i, &span) in span_lengths.iter().enumerate() {
            input.extend_from_slice(&tokens[pos..pos + gaps[i]]);
            pos += gaps[i];
            input.push(sentinel(i));
            target.push(sentinel(i));
            target.extend_from_slice(&tokens[pos..pos + span]);
            pos += span;
        }
        input.extend_from_slice(&tokens[pos..]);
    }
    target.push(sentinel(spans));
    Ok(CorruptionExample { input_tokens: input, target_tokens: target, source_modality: modality })
}

/// Splices the target spans back into the sentinel positions.
pub fn decorrupt(example: &CorruptionExample) -> Result<Vec<String>, CorruptError> {
    let mismatch = |m: String| CorruptError::SentinelMismatch(m);

    let mut spans: Vec<&[String]> = Vec::new();
    let target = &example.target_tokens;
    let mut start = None;
    let mut seen = 0;
    for (i, t) in target.iter().enumerate() {
        if let Some(k) = sentinel_index(t) {
            if k != seen {
                return Err(mismatch(format!("target sentinel {k} out of order")));
            }
            seen += 1;
            if let Some(s) = start {
                spans.push(&target[s..i]);
            }
            start = Some(i + 1);
        } else if start.is_none() {
            return Err(mismatch("target does not start with a sentinel".into()));
        }
    }
    let Some(last) = start else {
        return Err(mismatch("empty target".into()));
    };
    if last != target.len() {
        return Err(mismatch("target lacks a terminal sentinel".into()));
    }

    let mut out = Vec::new();
    let mut next = 0;
    for t in &example.input_tokens {
        match sentinel_index(t) {
            Some(k) if k == next && k < spans.len() => {
                out.extend_from_slice(spans[k]);
                next += 1;
            }
            Some(k) => return Err(mismatch(format!("input sentinel {k} unexpected"))),
            None => out.push(t.clone()),
        }
    }
    if next != spans.len() {
        return Err(mismatch(format!("input has {next} sentinels, target has {}", spans.len())));
    }
    Ok(out)
}

/// Position of a batch within a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchIndex {
    pub epoch: u64,
    pub batch: u64,
}

fn next_sequence(
    stream: &mut impl Iterator<Item = String>,
    tokenize: fn(&str) -> Vec<String>,
    max_len: usize,
    name: &'static str,
) -> Result<Vec<String>, CorruptError> {
    loop {
        let line = stream.next().ok_or(CorruptError::StreamExhausted(name))?;
        let mut tokens = tokenize(line.trim());
        if tokens.len() >= 2 {
            tokens.truncate(max_len);
            return Ok(tokens);
        }
    }
}

fn whitespace_pieces(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// A batch split evenly between text and SMILES, alternating text first.
///
/// Text is split into whitespace pieces and SMILES into SMILES tokens.
/// Lines with fewer than two tokens are skipped and longer ones truncated to
/// `max_seq_len`.
pub fn mixed_batch(
    text_stream: &mut impl Iterator<Item = String>,
    smiles_stream: &mut impl Iterator<Item = String>,
    batch_size: usize,
    config: &CorruptionConfig,
    index: BatchIndex,
) -> Result<Vec<CorruptionExample>, CorruptError> {
    config.validate()?;
    if batch_size == 0 || !batch_size.is_multiple_of(2) {
        return Err(CorruptError::BatchSize(batch_size));
    }
    let mut sequences = Vec::with_capacity(batch_size);
    for _ in 0..batch_size / 2 {
        sequences.push((next_sequence(text_stream, whitespace_pieces, config.max_seq_len, "text")?, Origin::Text));
        sequences.push((next_sequence(smiles_stream, tokenize_smiles, config.max_seq_len, "SMILES")?, Origin::Smiles));
    }
    sequences
        .par_iter()
        .enumerate()
        .map(|(i, (tokens, origin))| {
            let mut rng = example_rng(config.seed, index.epoch, index.batch, i as u64);
            corrupt(tokens, *origin, config, &mut rng)
        })
        .collect()
}

/// `modality<TAB>input<TAB>target` with space-joined tokens.
pub fn to_tsv_line(example: &CorruptionExample) -> String {
    let modality = match example.source_modality {
        Origin::Text => "text",
        Origin::Smiles => "smiles",
    };
    format!("{modality}\t{}\t{}", example.input_tokens.join(" "), example.target_tokens.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn sentinel_names_round_trip() {
        assert_eq!(sentinel(7), "<extra_id_7>");
        assert_eq!(sentinel_index("<extra_id_12>"), Some(12));
        assert_eq!(sentinel_index("<extra_id_>"), None);
        assert_eq!(sentinel_index("<extra_id_+1>"), None);
        assert_eq!(sentinel_index("extra_id_1"), None);
    }

    #[test]
    fn compositions_are_positive_and_sum() {
        let mut rng = example_rng(1, 0, 0, 0);
        for total in 1..40 {
            for parts in 1..=total {
                let c = composition(&mut rng, total, parts);
                assert_eq!(c.len(), parts);
                assert_eq!(c.iter().sum::<usize>(), total);
                assert!(c.iter().all(|&x| x >= 1));
            }
        }
    }

    #[test]
    fn tiny_rate_leaves_input_untouched() {
        let config = CorruptionConfig { corruption_rate: 0.01, ..Default::default() };
        let t = toks("a b c d e");
        let ex = corrupt(&t, Origin::Text, &config, &mut example_rng(0, 0, 0, 0)).unwrap();
        assert_eq!(ex.input_tokens, t);
        assert_eq!(ex.target_tokens, vec![sentinel(0)]);
    }

    #[test]
    fn single_span_layout() {
        let ex = CorruptionExample {
            input_tokens: toks("a <extra_id_0> d e"),
            target_tokens: toks("<extra_id_0> b c <extra_id_1>"),
            source_modality: Origin::Text,
        };
        assert_eq!(decorrupt(&ex).unwrap(), toks("a b c d e"));
    }

    #[test]
    fn two_span_reconstruction() {
        let ex = CorruptionExample {
            input_tokens: toks("thank you <extra_id_0> me to your party <extra_id_1> week"),
            target_tokens: toks("<extra_id_0> for inviting <extra_id_1> last <extra_id_2>"),
            source_modality: Origin::Text,
        };
        assert_eq!(decorrupt(&ex).unwrap(), toks("thank you for inviting me to your party last week"));
    }

    #[test]
    fn malformed_examples_are_rejected() {
        let bad = |input: &str, target: &str| {
            decorrupt(&CorruptionExample {
                input_tokens: toks(input),
                target_tokens: toks(target),
                source_modality: Origin::Text,
            })
            .is_err()
        };
        assert!(bad("a <extra_id_0> d", "<extra_id_0> b c"));
        assert!(bad("a <extra_id_0> d", "b <extra_id_0> c <extra_id_1>"));
        assert!(bad("a <extra_id_1> d", "<extra_id_0> b <extra_id_1>"));
        assert!(bad("a d", "<extra_id_0> b <extra_id_1>"));
        assert!(bad("a <extra_id_0> d", "<extra_id_1> b <extra_id_2>"));
        assert!(bad("a", ""));
        assert!(!bad("a", "<extra_id_0>"));
    }

    #[test]
    fn input_errors() {
        let c = CorruptionConfig::default();
        let mut rng = example_rng(0, 0, 0, 0);
        assert_eq!(corrupt(&toks("a"), Origin::Text, &c, &mut rng), Err(CorruptError::TooShort(1)));
        let long = vec!["x".to_string(); 513];
        assert_eq!(corrupt(&long, Origin::Text, &c, &mut rng), Err(CorruptError::TooLong { len: 513, max: 512 }));
        assert!(matches!(
            corrupt(&toks("a <extra_id_0> b"), Origin::Text, &c, &mut rng),
            Err(CorruptError::SentinelCollision(_))
        ));
        let few = CorruptionConfig { n_sentinels: 2, ..c };
        let many = vec!["x".to_string(); 100];
        assert!(matches!(corrupt(&many, Origin::Text, &few, &mut rng), Err(CorruptError::SentinelBudget { .. })));
        let zero = CorruptionConfig { corruption_rate: 0.0, ..c };
        assert!(matches!(corrupt(&many, Origin::Text, &zero, &mut rng), Err(CorruptError::Config(_))));
    }

    #[test]
    fn batches_split_modalities() {
        let mut text = ["a b c", "d e f g", "h", "i j"].into_iter().map(String::from);
        let mut smiles = ["CCO", "c1ccccc1"].into_iter().map(String::from);
        let batch =
            mixed_batch(&mut text, &mut smiles, 4, &CorruptionConfig::default(), BatchIndex::default()).unwrap();
        let kinds: Vec<Origin> = batch.iter().map(|e| e.source_modality).collect();
        assert_eq!(kinds, [Origin::Text, Origin::Smiles, Origin::Text, Origin::Smiles]);
        assert_eq!(decorrupt(&batch[3]).unwrap(), tokenize_smiles("c1ccccc1"));

        let mut text = ["a b"].into_iter().map(String::from);
        let mut smiles = ["CCO", "CCN"].into_iter().map(String::from);
        let err = mixed_batch(&mut text, &mut smiles, 4, &CorruptionConfig::default(), BatchIndex::default());
        assert_eq!(err, Err(CorruptError::StreamExhausted("text")));
        let mut none = std::iter::empty();
        let err =
            mixed_batch(&mut none, &mut std::iter::empty(), 3, &CorruptionConfig::default(), BatchIndex::default());
        assert_eq!(err, Err(CorruptError::BatchSize(3)));
    }
}
