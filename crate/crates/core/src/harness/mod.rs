//! Evaluation orchestration: read prediction records, dispatch the caption or
//! molecule-generation metrics, and build reports.

pub mod records;
pub mod report;
pub mod stats;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::embed::{frechet_distance, text2mol_score, EmbedError, EmbeddingTable, GaussianSummary};
use crate::fingerprint::{pair_similarities, FingerprintError, FpKind};
use crate::hash::Fnv64;
use crate::smiles::{canonicalize, parse, tokenize_smiles, MolGraph};
use crate::text::{bleu, levenshtein, meteor, rouge, MeteorParams, Origin, RougeVariant, TextError, TokenSequence};

pub use records::{parse_candidates, parse_records, write_records, CandidateRecord, EvalRecord};
pub use report::{parse_per_example, Better, MetricReport, MetricValue, Population, Task};
pub use stats::{significance, TTest, TestMode};

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    Input { line: usize, message: String },
    #[error("no {role} embedding for record {id:?}")]
    MissingEmbedding { role: &'static str, id: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error("significance: {0}")]
    Stats(String),
    #[error("normalization: {0}")]
    Normalization(String),
}

impl HarnessError {
    pub fn input(line: usize, message: impl Into<String>) -> HarnessError {
        HarnessError::Input { line, message: message.into() }
    }

    /// 1 for problems with input data, 2 for invalid configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Fingerprint(_) => 2,
            _ => 1,
        }
    }
}

/// Reference-side (`gt`) and prediction-side (`pred`) embeddings keyed by
/// record id.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub gt: EmbeddingTable,
    pub pred: EmbeddingTable,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalOptions {
    pub strip_names: bool,
    pub morgan: FpParams,
    pub path: FpParams,
    #[serde(skip)]
    pub embeddings: Option<Embeddings>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FpParams {
    /// Radius for Morgan, maximum bond count for paths.
    pub size: u32,
    pub bits: usize,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions {
            strip_names: false,
            morgan: FpParams { size: crate::fingerprint::DEFAULT_RADIUS, bits: crate::fingerprint::DEFAULT_BITS },
            path: FpParams { size: crate::fingerprint::DEFAULT_PATH_LEN, bits: crate::fingerprint::DEFAULT_BITS },
            embeddings: None,
        }
    }
}

fn digest_table(h: &mut Fnv64, table: &EmbeddingTable) {
    h.write_u64(table.dim() as u64);
    h.write_u64(table.len() as u64);
    for (id, v) in table.iter() {
        h.write(id.as_bytes());
        h.write(&[0]);
        for x in v {
            h.write(&x.to_bits().to_le_bytes());
        }
    }
}

impl EvalOptions {
    /// FNV-1a hash over the task, every option and the embedding contents.
    pub fn fingerprint(&self, task: Task) -> String {
        let mut h = Fnv64::default();
        h.write(report::to_stable_json(&(task, self)).as_bytes());
        match &self.embeddings {
            Some(e) => {
                digest_table(&mut h, &e.gt);
                digest_table(&mut h, &e.pred);
            }
            None => h.write(b"no-embeddings"),
        }
        format!("{:016x}", h.finish())
    }

    fn kinds(&self) -> Result<[(&'static str, FpKind); 3], HarnessError> {
        Ok([
            ("maccs_fts", FpKind::Maccs),
            ("rdk_fts", FpKind::path(self.path.size, self.path.bits)?),
            ("morgan_fts", FpKind::morgan(self.morgan.size, self.morgan.bits)?),
        ])
    }
}

/// Replaces a leading molecule name and its verb with "The molecule is".
///
/// The name is everything before the first " is " or " are " of the first
/// sentence; captions without one are returned unchanged.
pub fn strip_name(caption: &str) -> String {
    let first_sentence = caption.find(". ").map_or(caption.len(), |i| i + 1);
    let head = &caption[..first_sentence];
    let cut = [" is ", " are "].iter().filter_map(|v| head.find(v).map(|i| (i, *v))).min_by_key(|(i, _)| *i);
    match cut {
        Some((i, verb)) => format!("The molecule is {}", &caption[i + verb.len()..]),
        None => caption.to_string(),
    }
}

fn mean(x: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn lookup<'a>(table: &'a EmbeddingTable, role: &'static str, id: &str) -> Result<&'a [f64], HarnessError> {
    table.get(id).ok_or_else(|| HarnessError::MissingEmbedding { role, id: id.to_string() })
}

/// Per-record metric values, `None` outside the population.
type Series = Vec<Option<f64>>;

/// Text2Mol over the given record ids; `None` when no embeddings were given.
fn text2mol(
    embeddings: Option<&Embeddings>,
    ids: &[&str],
    population: Population,
) -> Result<Option<(MetricValue, Series)>, HarnessError> {
    let Some(e) = embeddings else { return Ok(None) };
    if ids.is_empty() {
        return Ok(Some((MetricValue::undefined(population, Better::Higher, "no valid predictions"), vec![])));
    }
    let pairs = ids
        .iter()
        .map(|id| Ok((lookup(&e.gt, "gt", id)?, lookup(&e.pred, "pred", id)?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    match text2mol_score(&pairs) {
        Ok(r) => {
            let mut m = MetricValue::new(r.mean, population, Better::Higher);
            if r.excluded > 0 {
                m = m.with_note(format!("{} pairs with zero vectors excluded", r.excluded));
            }
            Ok(Some((m, r.per_pair)))
        }
        Err(EmbedError::NoValidPairs) => Ok(Some((
            MetricValue::undefined(population, Better::Higher, "every pair has a zero vector"),
            vec![None; ids.len()],
        ))),
        Err(e) => Err(e.into()),
    }
}

fn empty_report(task: Task, records: &[EvalRecord], options: &EvalOptions) -> Result<MetricReport, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Text(TextError::EmptyCorpus));
    }
    Ok(MetricReport {
        task,
        metrics: BTreeMap::new(),
        n_records: records.len(),
        n_valid: records.len(),
        config_fingerprint: options.fingerprint(task),
        normalized: false,
        ids: records.iter().map(|r| r.id.clone()).collect(),
        per_example: BTreeMap::new(),
    })
}

/// BLEU-2/4, ROUGE-1/2/L and METEOR of predicted captions against the
/// ground truth, plus Text2Mol when embeddings are supplied.
pub fn eval_caption(records: &[EvalRecord], options: &EvalOptions) -> Result<MetricReport, HarnessError> {
    let mut report = empty_report(Task::Caption, records, options)?;
    let refs: Vec<TokenSequence> = records
        .iter()
        .map(|r| {
            if options.strip_names {
                TokenSequence::text(&strip_name(&r.ground_truth))
            } else {
                TokenSequence::text(&r.ground_truth)
            }
        })
        .collect();
    let hyps: Vec<TokenSequence> = records.iter().map(|r| TokenSequence::text(&r.prediction)).collect();

    let all = |v| MetricValue::new(v, Population::All, Better::Higher);
    report.metrics.insert("bleu2".into(), all(bleu(&refs, &hyps, 2)?));
    report.metrics.insert("bleu4".into(), all(bleu(&refs, &hyps, 4)?));
    for (name, variant) in [("rouge1", RougeVariant::One), ("rouge2", RougeVariant::Two), ("rouge_l", RougeVariant::L)]
    {
        let r = rouge(&refs, &hyps, variant)?;
        report.metrics.insert(name.into(), all(r.value));
        report.per_example.insert(name.into(), r.per_example.unwrap().into_iter().map(Some).collect());
    }
    let m = meteor(&refs, &hyps, MeteorParams::default())?;
    report.metrics.insert("meteor".into(), all(m.value));
    report.per_example.insert("meteor".into(), m.per_example.unwrap().into_iter().map(Some).collect());

    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    if let Some((value, per)) = text2mol(options.embeddings.as_ref(), &ids, Population::All)? {
        report.metrics.insert("text2mol".into(), value);
        report.per_example.insert("text2mol".into(), per);
    }
    Ok(report)
}

fn smiles_tokens(s: &str) -> TokenSequence {
    TokenSequence { tokens: tokenize_smiles(s), origin: Origin::Smiles }
}

/// Spreads values computed for the valid subset back onto all records.
fn scatter(valid: &[usize], values: &[Option<f64>], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; n];
    for (&i, v) in valid.iter().zip(values) {
        out[i] = *v;
    }
    out
}

/// Molecule-generation metrics. BLEU (character level, up to 4-grams), exact
/// match and Levenshtein distance cover every record; fingerprint
/// similarities, FCD and Text2Mol cover only records whose prediction parses.
pub fn eval_molgen(records: &[EvalRecord], options: &EvalOptions) -> Result<MetricReport, HarnessError> {
    let mut report = empty_report(Task::Molgen, records, options)?;
    let kinds = options.kinds()?;
    let n = records.len();

    let parsed: Vec<(MolGraph, Option<MolGraph>)> = records
        .par_iter()
        .map(|r| {
            let gt = parse(&r.ground_truth).map_err(|e| {
                HarnessError::input(r.line, format!("ground truth {:?} does not parse: {e}", r.ground_truth))
            })?;
            Ok((gt, parse(&r.prediction).ok()))
        })
        .collect::<Result<_, HarnessError>>()?;
    let valid: Vec<usize> = (0..n).filter(|&i| parsed[i].1.is_some()).collect();
    report.n_valid = valid.len();

    let all = |v, better| MetricValue::new(v, Population::All, better);
    report.metrics.insert("validity".into(), all(valid.len() as f64 / n as f64, Better::Higher));

    let refs: Vec<TokenSequence> = records.iter().map(|r| smiles_tokens(&r.ground_truth)).collect();
    let hyps: Vec<TokenSequence> = records.iter().map(|r| smiles_tokens(&r.prediction)).collect();
    report.metrics.insert("bleu".into(), all(bleu(&refs, &hyps, 4)?, Better::Higher));

    let exact: Vec<f64> = parsed
        .par_iter()
        .map(|(gt, pred)| match pred {
            Some(p) if canonicalize(gt) == canonicalize(p) => 1.0,
            _ => 0.0,
        })
        .collect();
    let lev: Vec<f64> = records.par_iter().map(|r| levenshtein(&r.ground_truth, &r.prediction) as f64).collect();
    report.metrics.insert("exact".into(), all(mean(exact.iter().copied()), Better::Higher));
    report.metrics.insert("levenshtein".into(), all(mean(lev.iter().copied()), Better::Lower));
    report.per_example.insert("exact".into(), exact.into_iter().map(Some).collect());
    report.per_example.insert("levenshtein".into(), lev.into_iter().map(Some).collect());

    let valid_pairs: Vec<(MolGraph, MolGraph)> =
        valid.iter().map(|&i| (parsed[i].0.clone(), parsed[i].1.clone().unwrap())).collect();
    let none_valid = "no valid predictions";
    for (name, kind) in kinds {
        if valid_pairs.is_empty() {
            report
                .metrics
                .insert(name.into(), MetricValue::undefined(Population::ValidOnly, Better::Higher, none_valid));
            report.per_example.insert(name.into(), vec![None; n]);
            continue;
        }
        let sims = pair_similarities(&valid_pairs, kind);
        report
            .metrics
            .insert(name.into(), MetricValue::new(mean(sims.iter().copied()), Population::ValidOnly, Better::Higher));
        let sims: Vec<Option<f64>> = sims.into_iter().map(Some).collect();
        report.per_example.insert(name.into(), scatter(&valid, &sims, n));
    }

    let valid_ids: Vec<&str> = valid.iter().map(|&i| records[i].id.as_str()).collect();
    if let Some(e) = &options.embeddings {
        let fcd = if valid_ids.len() < 2 {
            MetricValue::undefined(Population::ValidOnly, Better::Lower, "fewer than 2 valid predictions")
        } else {
            let gt = valid_ids.iter().map(|id| lookup(&e.gt, "gt", id)).collect::<Result<Vec<_>, _>>()?;
            let pred = valid_ids.iter().map(|id| lookup(&e.pred, "pred", id)).collect::<Result<Vec<_>, _>>()?;
            let d = frechet_distance(&GaussianSummary::fit(&gt)?, &GaussianSummary::fit(&pred)?)?;
            MetricValue::new(d, Population::ValidOnly, Better::Lower)
        };
        report.metrics.insert("fcd".into(), fcd);
    }
    if let Some((value, per)) = text2mol(options.embeddings.as_ref(), &valid_ids, Population::ValidOnly)? {
        report.metrics.insert("text2mol".into(), value);
        report.per_example.insert("text2mol".into(), scatter(&valid, &per, n));
    }
    Ok(report)
}

/// Rescales valid-only metrics by validity: higher-is-better values are
/// multiplied by it, lower-is-better values divided.
pub fn normalize_by_validity(report: &MetricReport) -> Result<MetricReport, HarnessError> {
    if report.normalized {
        return Err(HarnessError::Normalization("report is already normalized".into()));
    }
    let validity =
        report.validity().ok_or_else(|| HarnessError::Normalization("report has no validity value".into()))?;
    let mut out = report.clone();
    for (name, m) in out.metrics.iter_mut() {
        if m.population != Population::ValidOnly {
            continue;
        }
        if let Some(v) = m.value {
            m.value = Some(match m.better {
                Better::Higher => v * validity,
                Better::Lower if validity == 0.0 => {
                    return Err(HarnessError::Normalization(format!("cannot divide {name} by zero validity")))
                }
                Better::Lower => v / validity,
            });
        }
        m.population = Population::Normalized;
    }
    out.normalized = true;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selection {
    /// Position of the chosen candidate, `None` when no candidate parses.
    pub index: Option<usize>,
    pub smiles: String,
}

impl Selection {
    pub fn is_valid(&self) -> bool {
        self.index.is_some()
    }
}

/// Picks the first parseable candidate of each record.
pub fn select_first_valid(candidates: &[Vec<String>]) -> Result<Vec<Selection>, HarnessError> {
    candidates
        .par_iter()
        .enumerate()
        .map(|(i, beams)| {
            if beams.is_empty() {
                return Err(HarnessError::input(i + 1, "empty candidate list"));
            }
            let index = beams.iter().position(|s| crate::smiles::is_valid(s));
            Ok(Selection { index, smiles: index.map(|k| beams[k].clone()).unwrap_or_default() })
        })
        .collect()
}

/// Applies [`select_first_valid`] to a candidate file, producing ordinary
/// records whose prediction is the selection (empty when none is valid).
pub fn select_records(records: &[CandidateRecord]) -> Result<(Vec<EvalRecord>, Vec<Selection>), HarnessError> {
    let beams: Vec<Vec<String>> = records.iter().map(|r| r.candidates.clone()).collect();
    let picks = select_first_valid(&beams).map_err(|e| match e {
        HarnessError::Input { line, message } => HarnessError::input(records[line - 1].line, message),
        other => other,
    })?;
    let out = records
        .iter()
        .zip(&picks)
        .map(|(r, s)| EvalRecord {
            id: r.id.clone(),
            input: r.input.clone(),
            ground_truth: r.ground_truth.clone(),
            prediction: s.smiles.clone(),
            line: r.line,
        })
        .collect();
    Ok((out, picks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn name_stripping() {
        assert_eq!(strip_name("Aspirin is a member of benzoic acids."), "The molecule is a member of benzoic acids.");
        assert_eq!(strip_name("Sodium chloride is a salt. It is white."), "The molecule is a salt. It is white.");
        assert_eq!(strip_name("Lipids are fats."), "The molecule is fats.");
        assert_eq!(strip_name("A compound. It is white."), "A compound. It is white.");
        assert_eq!(strip_name("no verb here"), "no verb here");
    }

    #[test]
    fn beam_selection() {
        let v = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let picks = select_first_valid(&[v(&["C1CC", "CCO", "CCN"]), v(&["CCO", "C1CC"]), v(&["C1CC", "(("])]).unwrap();
        assert_eq!(picks[0], Selection { index: Some(1), smiles: "CCO".into() });
        assert_eq!(picks[1], Selection { index: Some(0), smiles: "CCO".into() });
        assert_eq!(picks[2], Selection { index: None, smiles: String::new() });
        assert!(!picks[2].is_valid());
        assert!(select_first_valid(&[vec![]]).is_err());
    }

    #[test]
    fn table_nine_arithmetic() {
        let mut metrics = BTreeMap::new();
        metrics.insert("validity".into(), MetricValue::new(0.635, Population::All, Better::Higher));
        metrics.insert("maccs_fts".into(), MetricValue::new(0.811, Population::ValidOnly, Better::Higher));
        metrics.insert("fcd".into(), MetricValue::new(2.99, Population::ValidOnly, Better::Lower));
        metrics.insert("levenshtein".into(), MetricValue::new(40.0, Population::All, Better::Lower));
        let report = MetricReport {
            task: Task::Molgen,
            metrics,
            n_records: 1000,
            n_valid: 635,
            config_fingerprint: String::new(),
            normalized: false,
            ids: vec![],
            per_example: BTreeMap::new(),
        };
        let n = normalize_by_validity(&report).unwrap();
        assert!((n.metrics["maccs_fts"].value.unwrap() - 0.51499).abs() <= 5e-6);
        assert_eq!(format!("{:.2}", n.metrics["fcd"].value.unwrap()), "4.71");
        assert_eq!(n.metrics["levenshtein"].value, Some(40.0));
        assert_eq!(n.metrics["fcd"].population, Population::Normalized);
        assert!(normalize_by_validity(&n).is_err());
    }
}
