use super::bleu::ngram_counts;
use super::{check_lengths, ScoreReport, TextError, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeVariant {
    One,
    Two,
    L,
}

impl RougeVariant {
    pub fn name(self) -> &'static str {
        match self {
            RougeVariant::One => "rouge-1",
            RougeVariant::Two => "rouge-2",
            RougeVariant::L => "rouge-l",
        }
    }
}

fn f1(overlap: usize, hyp: usize, reference: usize) -> f64 {
    if hyp == 0 && reference == 0 {
        return 1.0;
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / hyp as f64;
    let r = overlap as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

fn ngram_f1(r: &[String], h: &[String], n: usize) -> f64 {
    let (rg, hg) = (ngram_counts(r, n), ngram_counts(h, n));
    let overlap = hg.iter().map(|(g, c)| (*c).min(rg.get(g).copied().unwrap_or(0))).sum();
    f1(overlap, hg.values().sum(), rg.values().sum())
}

fn lcs(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Mean per-example ROUGE F1.
///
/// An example whose reference and hypothesis both have no n-grams of the
/// requested size scores 1.
pub fn rouge(refs: &[TokenSequence], hyps: &[TokenSequence], variant: RougeVariant) -> Result<ScoreReport, TextError> {
    check_lengths(refs.len(), hyps.len())?;
    let per: Vec<f64> = refs
        .iter()
        .zip(hyps)
        .map(|(r, h)| match variant {
            RougeVariant::One => ngram_f1(&r.tokens, &h.tokens, 1),
            RougeVariant::Two => ngram_f1(&r.tokens, &h.tokens, 2),
            RougeVariant::L => f1(lcs(&r.tokens, &h.tokens), h.len(), r.len()),
        })
        .collect();
    Ok(ScoreReport::from_examples(variant.name(), per))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(v: &[&str]) -> Vec<TokenSequence> {
        v.iter().map(|s| TokenSequence::text(s)).collect()
    }

    #[test]
    fn identical_and_disjoint() {
        let c = seqs(&["a b c", "d e", "f"]);
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            assert_eq!(rouge(&c, &c, v).unwrap().value, 1.0);
            assert_eq!(rouge(&seqs(&["a b"]), &seqs(&["c d"]), v).unwrap().value, 0.0);
        }
    }

    #[test]
    fn lcs_hand_example() {
        let got = rouge(&seqs(&["a b c d"]), &seqs(&["a c d"]), RougeVariant::L).unwrap();
        assert!((got.value - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn per_example_values_are_reported() {
        let r = rouge(&seqs(&["a b", "c"]), &seqs(&["a b", "d"]), RougeVariant::One).unwrap();
        assert_eq!(r.per_example, Some(vec![1.0, 0.0]));
        assert_eq!(r.value, 0.5);
    }
}
