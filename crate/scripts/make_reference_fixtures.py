"""Regenerate the external-toolkit reference fixtures under crates/core/tests/data.

Requires: rdkit, nltk, rouge-score. Only needed when fixtures change; the Rust
tests read the generated files and do not call Python.
"""

import math
import random
import string
import sys
from pathlib import Path

from nltk.stem.porter import PorterStemmer
from nltk.translate.bleu_score import corpus_bleu
from nltk.translate.meteor_score import single_meteor_score
from rdkit import Chem
from rdkit.Chem import MACCSkeys
from rouge_score import rouge_scorer

DATA = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"

VOCAB = """
the molecule is a an of and or with which in to from by as conjugate acid base
derived role metabolite has it functionally related obtained formal condensation
carboxy group amino hydroxy methyl ethyl propyl butyl phenyl benzene ring rings
aromatic compound compounds containing substituted substitution position positions
monocarboxylic dicarboxylic acids alcohol alcohols primary secondary tertiary ketone
aldehyde ester esters ether amide amine amines nitrogen oxygen sulfur chloride bromide
natural product found plant plants isolated species human mouse metabolic reactions
inhibitor inhibiting inhibits agonist antagonist antibacterial antifungal drug drugs
cation anion zwitterion tautomer enantiomer stereoisomer configuration major microspecies
steroid steroids lipid lipids fatty sugar sugars glucoside glycoside peptide peptides
hydrolysis oxidation reduction reduced oxidized hydroxylated methylated generalization
relational conditional electrical adoption controlling agreed plastered motoring hopping
falling filing happy ponies caresses sensational hopeful goodness rational formality
sensitivity sensibility irritant replacement adjustment dependent communism activate
angularity homologous effective bowdlerize feudalism hesitanci vietnamization predication
operator conformabli radicalli differentli vileli analogousli decisiveness triplicate
formative formalize electriciti hopefulness revival allowance inference airliner gyroscopic
adjustable defensible irritant dependent adoption homologou angulariti rate cease
controll roll generate generates generated generating lying dying skies news sky
""".split()


def words(rng):
    out = list(VOCAB)
    for _ in range(1500):
        n = rng.randint(1, 12)
        out.append("".join(rng.choice(string.ascii_lowercase) for _ in range(n)))
    # Suffix-heavy synthetic words exercise every rule.
    suffixes = ["ational", "tional", "enci", "anci", "izer", "abli", "alli", "entli", "eli",
                "ousli", "ization", "ation", "ator", "alism", "iveness", "fulness", "ousness",
                "aliti", "iviti", "biliti", "icate", "ative", "alize", "iciti", "ical", "ful",
                "ness", "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
                "ment", "ent", "sion", "tion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
                "e", "ll", "eed", "ed", "ing", "y", "sses", "ies", "ss", "s", "at", "bl", "iz"]
    stems = ["r", "tr", "bat", "hop", "fil", "conf", "troubl", "oat", "priv", "gener",
             "electr", "adopt", "control", "feed", "motor", "sing", "happ", "cr", "fizz"]
    for s in stems:
        for suf in suffixes:
            out.append(s + suf)
    return sorted(set(out))


def sentence(rng, n):
    return [rng.choice(VOCAB[:120]) for _ in range(n)]


def perturb(rng, toks):
    toks = list(toks)
    for _ in range(rng.randint(0, 4)):
        op = rng.random()
        if op < 0.3 and len(toks) > 1:
            del toks[rng.randrange(len(toks))]
        elif op < 0.6:
            toks.insert(rng.randrange(len(toks) + 1), rng.choice(VOCAB))
        elif op < 0.8 and len(toks) > 1:
            i, j = rng.randrange(len(toks)), rng.randrange(len(toks))
            toks[i], toks[j] = toks[j], toks[i]
        else:
            i = rng.randrange(len(toks))
            toks[i] = toks[i] + rng.choice(["s", "ed", "ing", "al", "ation"])
    return toks


class NoSynonyms:
    def synsets(self, *args, **kwargs):
        return []


class Whitespace:
    def tokenize(self, text):
        return text.split()


def main():
    rng = random.Random(20240501)

    molecules = [l.strip() for l in (DATA / "molecules.smi").read_text().splitlines() if l.strip()]
    with open(DATA / "maccs_reference.tsv", "w") as f:
        for s in molecules:
            m = Chem.MolFromSmiles(s)
            if m is None:
                sys.exit(f"reference toolkit rejects {s}")
            bits = ",".join(str(b) for b in MACCSkeys.GenMACCSKeys(m).GetOnBits())
            f.write(f"{s}\t{bits}\n")

    porter = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
    with open(DATA / "porter_reference.tsv", "w") as f:
        for w in words(rng):
            f.write(f"{w}\t{porter.stem(w)}\n")

    pairs = []
    for _ in range(500):
        ref = sentence(rng, rng.randint(1, 25))
        pairs.append((ref, perturb(rng, ref)))
    with open(DATA / "meteor_reference.tsv", "w") as f:
        for ref, hyp in pairs:
            score = single_meteor_score(ref, hyp, stemmer=porter, wordnet=NoSynonyms())
            f.write(f"{' '.join(ref)}\t{' '.join(hyp)}\t{score!r}\n")

    scorer = rouge_scorer.RougeScorer(["rouge1", "rouge2", "rougeL"], tokenizer=Whitespace())
    with open(DATA / "rouge_reference.tsv", "w") as f:
        for ref, hyp in pairs:
            s = scorer.score(" ".join(ref), " ".join(hyp))
            f.write(f"{' '.join(ref)}\t{' '.join(hyp)}\t{s['rouge1'].fmeasure!r}\t"
                    f"{s['rouge2'].fmeasure!r}\t{s['rougeL'].fmeasure!r}\n")

    # Corpora of 20 pairs each, long enough that no n-gram order is empty or
    # unmatched, so unsmoothed corpus BLEU is directly comparable.
    with open(DATA / "bleu_reference.tsv", "w") as f:
        for c in range(40):
            refs, hyps = [], []
            for _ in range(20):
                ref = sentence(rng, rng.randint(6, 20))
                hyp = perturb(rng, ref)
                refs.append(ref)
                hyps.append(hyp)
            b2 = corpus_bleu([[r] for r in refs], hyps, weights=(0.5, 0.5))
            b4 = corpus_bleu([[r] for r in refs], hyps, weights=(0.25,) * 4)
            assert b4 > 0 and not math.isnan(b4)
            for r, h in zip(refs, hyps):
                f.write(f"{c}\t{' '.join(r)}\t{' '.join(h)}\t{b2!r}\t{b4!r}\n")


if __name__ == "__main__":
    main()
