use crate::smiles::canonical_smiles;

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Both strings parse and canonicalize to the same SMILES.
pub fn exact_match(gt: &str, pred: &str) -> bool {
    match (canonical_smiles(gt), canonical_smiles(pred)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        assert_eq!(levenshtein("CCO", "CCO"), 0);
        assert_eq!(levenshtein("CCO", "CC"), 1);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("ab", ""), 2);
    }

    #[test]
    fn exact() {
        assert!(exact_match("CCO", "OCC"));
        assert!(!exact_match("CCO", "CCN"));
        assert!(!exact_match("CCO", "C1CC"));
        assert!(!exact_match("C1CC", "C1CC"));
    }
}
