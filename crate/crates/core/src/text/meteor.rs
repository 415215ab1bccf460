use super::porter::stem;
use super::{check_lengths, ScoreReport, TextError, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams { alpha: 0.9, beta: 3.0, gamma: 0.5 }
    }
}

/// Greedy matching from the end of both lists; matched entries are removed.
fn match_stage(hyp: &mut Vec<(usize, String)>, refs: &mut Vec<(usize, String)>, out: &mut Vec<(usize, usize)>) {
    let mut i = hyp.len();
    while i > 0 {
        i -= 1;
        if let Some(j) = (0..refs.len()).rev().find(|&j| refs[j].1 == hyp[i].1) {
            out.push((hyp[i].0, refs[j].0));
            hyp.remove(i);
            refs.remove(j);
        }
    }
}

fn count_chunks(matches: &[(usize, usize)]) -> usize {
    let mut chunks = 1;
    for w in matches.windows(2) {
        if !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1) {
            chunks += 1;
        }
    }
    chunks
}

/// Sentence METEOR with exact then Porter-stem unigram matching.
pub fn sentence_meteor(reference: &[String], hypothesis: &[String], params: MeteorParams) -> f64 {
    let mut hyp: Vec<(usize, String)> = hypothesis.iter().cloned().enumerate().collect();
    let mut refs: Vec<(usize, String)> = reference.iter().cloned().enumerate().collect();
    let mut matches = Vec::new();
    match_stage(&mut hyp, &mut refs, &mut matches);
    let mut hyp_stems: Vec<(usize, String)> = hyp.into_iter().map(|(i, w)| (i, stem(&w))).collect();
    let mut ref_stems: Vec<(usize, String)> = refs.into_iter().map(|(i, w)| (i, stem(&w))).collect();
    match_stage(&mut hyp_stems, &mut ref_stems, &mut matches);
    matches.sort_unstable();

    let m = matches.len();
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / hypothesis.len() as f64;
    let recall = m as f64 / reference.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let frag = count_chunks(&matches) as f64 / m as f64;
    let penalty = params.gamma * frag.powf(params.beta);
    (1.0 - penalty) * fmean
}

/// Mean sentence-level METEOR over the corpus.
pub fn meteor(refs: &[TokenSequence], hyps: &[TokenSequence], params: MeteorParams) -> Result<ScoreReport, TextError> {
    check_lengths(refs.len(), hyps.len())?;
    let per = refs.iter().zip(hyps).map(|(r, h)| sentence_meteor(&r.tokens, &h.tokens, params)).collect();
    Ok(ScoreReport::from_examples("meteor", per))
}
