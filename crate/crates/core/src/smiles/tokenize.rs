/// Split a SMILES string into character-level tokens.
///
/// Bracket atoms stay whole, `Cl`/`Br` are single tokens and `%nn` ring labels
/// are one token. Everything else is one character per token. The function is
/// purely lexical: concatenating the output always gives back the input.
pub fn tokenize_smiles(smiles: &str) -> Vec<String> {
    let chars: Vec<char> = smiles.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let len = match c {
            '[' => match chars[i..].iter().position(|&x| x == ']') {
                Some(end) => end + 1,
                None => chars.len() - i,
            },
            'C' if chars.get(i + 1) == Some(&'l') => 2,
            'B' if chars.get(i + 1) == Some(&'r') => 2,
            '%' if chars.get(i + 1).is_some_and(char::is_ascii_digit)
                && chars.get(i + 2).is_some_and(char::is_ascii_digit) =>
            {
                3
            }
            _ => 1,
        };
        tokens.push(chars[i..i + len].iter().collect());
        i += len;
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(tokenize_smiles("CCO"), ["C", "C", "O"]);
        assert_eq!(tokenize_smiles("C(=O)Cl"), ["C", "(", "=", "O", ")", "Cl"]);
        assert_eq!(tokenize_smiles("[39Ar]"), ["[39Ar]"]);
        assert_eq!(tokenize_smiles("C%12CC%12Br"), ["C", "%12", "C", "C", "%12", "Br"]);
        assert!(tokenize_smiles("").is_empty());
    }

    proptest! {
        #[test]
        fn lossless(s in "\\PC{0,64}") {
            prop_assert_eq!(tokenize_smiles(&s).concat(), s);
        }

        #[test]
        fn lossless_smiles_alphabet(s in "[CNOSPBrcl\\[\\]()=#%0-9@+\\-]{0,64}") {
            prop_assert_eq!(tokenize_smiles(&s).concat(), s);
        }
    }
}
