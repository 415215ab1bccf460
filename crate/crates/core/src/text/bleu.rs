use std::collections::HashMap;

use super::{check_lengths, TextError, TokenSequence};

/// Floor used in place of a zero modified precision.
pub const EPSILON: f64 = 1e-9;

pub(super) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU with one reference per hypothesis.
///
/// Modified precisions are pooled over the corpus for each order `1..=max_n`.
/// Orders for which the hypotheses contain no n-grams at all are left out of
/// the geometric mean; a zero precision is replaced by [`EPSILON`].
pub fn bleu(refs: &[TokenSequence], hyps: &[TokenSequence], max_n: usize) -> Result<f64, TextError> {
    check_lengths(refs.len(), hyps.len())?;
    if max_n != 2 && max_n != 4 {
        return Err(TextError::BleuOrder(max_n));
    }
    let mut matched = vec![0usize; max_n + 1];
    let mut total = vec![0usize; max_n + 1];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (r, h) in refs.iter().zip(hyps) {
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=max_n {
            let ref_counts = ngram_counts(&r.tokens, n);
            for (g, c) in ngram_counts(&h.tokens, n) {
                matched[n] += c.min(ref_counts.get(g).copied().unwrap_or(0));
                total[n] += c;
            }
        }
    }
    if hyp_len == 0 {
        return Ok(0.0);
    }
    let logs: Vec<f64> = (1..=max_n)
        .filter(|&n| total[n] > 0)
        .map(|n| {
            let p = if matched[n] == 0 { EPSILON } else { matched[n] as f64 / total[n] as f64 };
            p.ln()
        })
        .collect();
    let brevity = if hyp_len > ref_len { 1.0 } else { (1.0 - ref_len as f64 / hyp_len as f64).exp() };
    Ok(brevity * (logs.iter().sum::<f64>() / logs.len() as f64).exp())
}
