//! Rank-based retrieval evaluation: Mean Rank, MRR and Hits@k of a gold
//! corpus item under cosine similarity.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::embed::{cosine, EmbeddingTable};

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("gold item {gold:?} for query {query:?} is not in the corpus")]
    MissingGold { query: String, gold: String },
    #[error("query dimension {queries} differs from corpus dimension {corpus}")]
    Dimension { queries: usize, corpus: usize },
    #[error("no query has an embedding")]
    NoQueries,
    #[error("k must be positive")]
    ZeroK,
    #[error("gold line {line}: {message}")]
    Gold { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRank {
    pub query: String,
    pub gold: String,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankResult {
    pub mean_rank: f64,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
    pub n_queries: usize,
    /// Gold pairs skipped because the query had no embedding.
    pub excluded: usize,
    pub ranks: Vec<QueryRank>,
}

/// Parses `query_id<TAB>corpus_id` lines.
pub fn parse_gold(text: &str) -> Result<Vec<(String, String)>, RetrievalError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: &str| RetrievalError::Gold { line: i + 1, message: message.into() };
        let (q, c) = line.split_once('\t').ok_or_else(|| err("expected `query_id<TAB>corpus_id`"))?;
        if q.is_empty() || c.is_empty() || c.contains('\t') {
            return Err(err("expected `query_id<TAB>corpus_id`"));
        }
        if !seen.insert(q.to_string()) {
            return Err(err("duplicate query id"));
        }
        out.push((q.to_string(), c.to_string()));
    }
    Ok(out)
}

fn similarity(a: &[f64], b: &[f64]) -> f64 {
    cosine(a, b).unwrap_or(f64::NEG_INFINITY)
}

/// `1 +` items strictly more similar than the gold `+` equally similar items
/// with a smaller id. A zero vector has similarity −∞ to everything.
fn rank_of(query: &[f64], gold: &str, corpus: &EmbeddingTable) -> usize {
    let gold_sim = similarity(query, corpus.get(gold).expect("gold checked"));
    1 + corpus
        .iter()
        .filter(|&(id, v)| match similarity(query, v).total_cmp(&gold_sim) {
            Ordering::Greater => true,
            Ordering::Equal => id < gold,
            Ordering::Less => false,
        })
        .count()
}

pub fn rank_retrieval(
    queries: &EmbeddingTable,
    corpus: &EmbeddingTable,
    gold: &[(String, String)],
    ks: &[usize],
) -> Result<RankResult, RetrievalError> {
    if corpus.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    if queries.dim() != corpus.dim() {
        return Err(RetrievalError::Dimension { queries: queries.dim(), corpus: corpus.dim() });
    }
    if ks.contains(&0) {
        return Err(RetrievalError::ZeroK);
    }
    if let Some((q, g)) = gold.iter().find(|(_, g)| corpus.get(g).is_none()) {
        return Err(RetrievalError::MissingGold { query: q.clone(), gold: g.clone() });
    }

    let ranks: Vec<QueryRank> = gold
        .par_iter()
        .filter_map(|(q, g)| {
            let v = queries.get(q)?;
            Some(QueryRank { query: q.clone(), gold: g.clone(), rank: rank_of(v, g, corpus) })
        })
        .collect();
    if ranks.is_empty() {
        return Err(RetrievalError::NoQueries);
    }

    let n = ranks.len() as f64;
    let hits = ks.iter().map(|&k| (k, ranks.iter().filter(|r| r.rank <= k).count() as f64 / n)).collect();
    Ok(RankResult {
        mean_rank: ranks.iter().map(|r| r.rank as f64).sum::<f64>() / n,
        mrr: ranks.iter().map(|r| 1.0 / r.rank as f64).sum::<f64>() / n,
        hits,
        n_queries: ranks.len(),
        excluded: gold.len() - ranks.len(),
        ranks,
    })
}

impl RankResult {
    /// Per-query ranks as TSV with a header line.
    pub fn ranks_tsv(&self) -> String {
        let mut out = String::from("query_id\tgold_id\trank\n");
        for r in &self.ranks {
            out.push_str(&format!("{}\t{}\t{}\n", r.query, r.gold, r.rank));
        }
        out
    }
}
