use moltext::text::porter::stem;
use moltext::text::{
    bleu, levenshtein, meteor, rouge, sentence_meteor, MeteorParams, Origin, RougeVariant, TokenSequence,
};
use proptest::prelude::*;

const PORTER: &str = include_str!("data/porter_reference.tsv");
const METEOR: &str = include_str!("data/meteor_reference.tsv");
const ROUGE: &str = include_str!("data/rouge_reference.tsv");
const BLEU: &str = include_str!("data/bleu_reference.tsv");

fn words(s: &str) -> TokenSequence {
    TokenSequence { tokens: s.split_whitespace().map(str::to_string).collect(), origin: Origin::Text }
}

#[test]
fn porter_matches_reference_stemmer() {
    let mut n = 0;
    for line in PORTER.lines() {
        let (word, expected) = line.split_once('\t').unwrap();
        assert_eq!(stem(word), expected, "{word}");
        n += 1;
    }
    assert!(n > 2000);
}

#[test]
fn meteor_matches_reference_implementation() {
    for line in METEOR.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        let expected: f64 = f[2].parse().unwrap();
        let got = sentence_meteor(&words(f[0]).tokens, &words(f[1]).tokens, MeteorParams::default());
        assert!((got - expected).abs() < 1e-12, "{line}: {got}");
    }
}

#[test]
fn rouge_matches_reference_implementation() {
    for line in ROUGE.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        let (r, h) = (vec![words(f[0])], vec![words(f[1])]);
        for (variant, col) in [(RougeVariant::One, 2), (RougeVariant::Two, 3), (RougeVariant::L, 4)] {
            if variant == RougeVariant::Two && r[0].len() < 2 && h[0].len() < 2 {
                // No bigrams on either side: scored 1 here, 0 by the reference scorer.
                continue;
            }
            let expected: f64 = f[col].parse().unwrap();
            let got = rouge(&r, &h, variant).unwrap().value;
            assert!((got - expected).abs() < 1e-12, "{variant:?} {line}: {got}");
        }
    }
}

#[test]
fn bleu_matches_reference_implementation() {
    let mut corpora: Vec<(Vec<TokenSequence>, Vec<TokenSequence>, f64, f64)> = Vec::new();
    let mut current = "";
    for line in BLEU.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        if f[0] != current {
            current = f[0];
            corpora.push((Vec::new(), Vec::new(), f[3].parse().unwrap(), f[4].parse().unwrap()));
        }
        let c = corpora.last_mut().unwrap();
        c.0.push(words(f[1]));
        c.1.push(words(f[2]));
    }
    assert_eq!(corpora.len(), 40);
    for (refs, hyps, b2, b4) in corpora {
        assert!((bleu(&refs, &hyps, 2).unwrap() - b2).abs() < 1e-12);
        assert!((bleu(&refs, &hyps, 4).unwrap() - b4).abs() < 1e-12);
    }
}

/// Full-matrix dynamic program, written independently of the library.
fn levenshtein_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    d[0] = (0..=b.len()).collect();
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn levenshtein_matches_dp_oracle(a in "[CNOc1()=#]{0,40}", b in "[CNOc1()=#]{0,40}") {
        let d = levenshtein(&a, &b);
        prop_assert_eq!(d, levenshtein_oracle(&a, &b));
        prop_assert_eq!(d, levenshtein(&b, &a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn levenshtein_triangle_inequality(a in "\\PC{0,20}", b in "\\PC{0,20}", c in "\\PC{0,20}") {
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }

    #[test]
    fn metrics_stay_in_range(
        pairs in proptest::collection::vec(("[a-e ]{0,30}", "[a-e ]{0,30}"), 1..8)
    ) {
        let refs: Vec<TokenSequence> = pairs.iter().map(|(r, _)| TokenSequence::text(r)).collect();
        let hyps: Vec<TokenSequence> = pairs.iter().map(|(_, h)| TokenSequence::text(h)).collect();
        for n in [2, 4] {
            let b = bleu(&refs, &hyps, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
        }
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            let r = rouge(&refs, &hyps, v).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.value));
            prop_assert_eq!(r.per_example.unwrap().len(), pairs.len());
        }
        let m = meteor(&refs, &hyps, MeteorParams::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.value));
    }

    #[test]
    fn self_scores_follow_the_formulas(s in "[a-e]( [a-e]){0,15}") {
        let x = vec![TokenSequence::text(&s)];
        prop_assert_eq!(bleu(&x, &x, 4).unwrap(), 1.0);
        prop_assert_eq!(rouge(&x, &x, RougeVariant::L).unwrap().value, 1.0);
        let m = x[0].len() as f64;
        let expected = 1.0 - 0.5 * (1.0 / m).powi(3);
        let got = meteor(&x, &x, MeteorParams::default()).unwrap().value;
        prop_assert!((got - expected).abs() < 1e-12);
    }
}
