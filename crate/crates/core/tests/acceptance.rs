//! Acceptance criteria, one PASS/FAIL line each. Tolerances are fixed here.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{below, closure_smiles, normal, random_molecule, shuffled, uniform};
use moltext::corrupt::{corrupt, decorrupt, example_rng, mixed_batch, to_tsv_line, BatchIndex, CorruptionConfig};
use moltext::embed::linalg::{sqrt_psd, Matrix};
use moltext::embed::{frechet_distance, EmbeddingTable, GaussianSummary};
use moltext::harness::stats::two_sided_p;
use moltext::harness::{
    eval_molgen, normalize_by_validity, significance, write_records, Better, Embeddings, EvalOptions, EvalRecord,
    MetricReport, MetricValue, Population, Task, TestMode,
};
use moltext::retrieval::rank_retrieval;
use moltext::smiles::{canonical_smiles, canonicalize, is_valid, parse, write_smiles};
use moltext::text::{bleu, levenshtein, rouge, sentence_meteor, MeteorParams, RougeVariant, TokenSequence};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn self_embeddings(ids: &[String], dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = EmbeddingTable::new(dim);
    for id in ids {
        t.insert(id.clone(), (0..dim).map(|_| normal(&mut rng)).collect()).unwrap();
    }
    t
}

fn ground_truth_identity() -> Outcome {
    let corpus = common::corpus();
    ensure!(corpus.len() >= 100, "corpus has only {} records", corpus.len());
    let start = Instant::now();
    let records: Vec<EvalRecord> =
        corpus.iter().enumerate().map(|(i, s)| EvalRecord::new(&format!("m{i}"), "", s, s)).collect();
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let table = self_embeddings(&ids, 16, 1);
    let options = EvalOptions { embeddings: Some(Embeddings { gt: table.clone(), pred: table }), ..Default::default() };
    let r = eval_molgen(&records, &options).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(r.n_records == corpus.len() && r.n_valid == corpus.len(), "counts {} / {}", r.n_valid, r.n_records);
    let expected = [
        ("bleu", 1.0),
        ("exact", 1.0),
        ("levenshtein", 0.0),
        ("maccs_fts", 1.0),
        ("rdk_fts", 1.0),
        ("morgan_fts", 1.0),
        ("fcd", 0.0),
        ("validity", 1.0),
    ];
    for (name, want) in expected {
        let got = r.metrics[name].value.ok_or(format!("{name} undefined"))?;
        ensure!(close(got, want, 1e-9), "{name} = {got}");
    }
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("{} records in {:.2?}", corpus.len(), elapsed))
}

fn normalization_arithmetic() -> Outcome {
    let metrics = BTreeMap::from([
        ("validity".to_string(), MetricValue::new(0.635, Population::All, Better::Higher)),
        ("maccs_fts".to_string(), MetricValue::new(0.811, Population::ValidOnly, Better::Higher)),
        ("fcd".to_string(), MetricValue::new(2.99, Population::ValidOnly, Better::Lower)),
    ]);
    let report = MetricReport {
        task: Task::Molgen,
        metrics,
        n_records: 1000,
        n_valid: 635,
        config_fingerprint: "fixture".into(),
        normalized: false,
        ids: Vec::new(),
        per_example: BTreeMap::new(),
    };
    let emitted = MetricReport::from_json(&normalize_by_validity(&report).map_err(|e| e.to_string())?.to_json())
        .map_err(|e| e.to_string())?;
    let maccs = emitted.metrics["maccs_fts"].value.unwrap();
    let fcd = emitted.metrics["fcd"].value.unwrap();
    ensure!(close(maccs, 0.51499, 5e-6), "MACCS {maccs}");
    ensure!(format!("{fcd:.2}") == "4.71", "FCD {fcd}");
    Ok(format!("MACCS {maccs}, FCD {fcd:.2}"))
}

fn parser_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for i in 0..10_000 {
        let mut bytes = vec![0u8; below(&mut rng, 256)];
        rng.fill_bytes(&mut bytes);
        if i % 2 == 0 {
            const ALPHABET: &[u8] = b"CNOSclnos()[]=#@+-.%123456789H";
            bytes.iter_mut().for_each(|b| *b = ALPHABET[*b as usize % ALPHABET.len()]);
        }
        let s = String::from_utf8_lossy(&bytes).into_owned();
        ensure!(catch_unwind(|| is_valid(&s)).is_ok(), "is_valid panicked on {s:?}");
    }
    let mut checked = 0;
    while checked < 1000 {
        let mol = random_molecule(&mut rng);
        let n = mol.symbols.len();
        let base = closure_smiles(&mol, &(0..n).collect::<Vec<_>>(), &mut rng);
        let Ok(graph) = parse(&base) else {
            continue;
        };
        let c = canonicalize(&graph);
        ensure!(canonical_smiles(&c).as_deref() == Ok(c.as_str()), "round trip of {base} via {c}");
        for _ in 0..3 {
            let s = closure_smiles(&mol, &shuffled(&mut rng, n), &mut rng);
            ensure!(canonical_smiles(&s).as_deref() == Ok(c.as_str()), "{base} vs {s}");
            let w = write_smiles(&graph, &shuffled(&mut rng, graph.atom_count()));
            ensure!(canonical_smiles(&w).as_deref() == Ok(c.as_str()), "{base} vs {w}");
        }
        checked += 1;
    }
    Ok("10000 fuzzed strings, 1000 molecules, 0 failures".into())
}

fn levenshtein_oracle(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    d[0] = (0..=b.len()).collect();
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    const ALPHABET: [char; 10] = ['C', 'N', 'O', 'c', '1', '(', ')', '=', '#', 'é'];
    for _ in 0..10_000 {
        let mut draw = || -> Vec<char> { (0..below(&mut rng, 40)).map(|_| ALPHABET[below(&mut rng, 10)]).collect() };
        let (a, b) = (draw(), draw());
        let (sa, sb): (String, String) = (a.iter().collect(), b.iter().collect());
        ensure!(levenshtein(&sa, &sb) == levenshtein_oracle(&a, &b), "levenshtein({sa:?}, {sb:?})");
    }
    let t = TokenSequence::text;
    let b = bleu(&[t("the cat sat")], &[t("the cat")], 2).map_err(|e| e.to_string())?;
    ensure!(close(b, (-0.5f64).exp(), 1e-9), "BLEU {b}");
    let r = rouge(&[t("a b c d")], &[t("a c d")], RougeVariant::L).map_err(|e| e.to_string())?.value;
    ensure!(close(r, 6.0 / 7.0, 1e-9), "ROUGE-L {r}");
    let params = MeteorParams::default();
    let m1 = sentence_meteor(&t("hello").tokens, &t("hello").tokens, params);
    ensure!(close(m1, 0.5, 1e-9), "METEOR single token {m1}");
    let m3 = sentence_meteor(&t("the cat sat").tokens, &t("the cat sat").tokens, params);
    ensure!(close(m3, 53.0 / 54.0, 1e-9), "METEOR three tokens {m3}");
    Ok("10000 Levenshtein pairs; BLEU, ROUGE-L, METEOR fixtures".into())
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank_deficit: usize) -> Matrix {
    let mut b = Matrix::from_rows(&(0..n).map(|_| (0..n).map(|_| normal(rng)).collect()).collect::<Vec<Vec<f64>>>());
    for i in 0..n {
        for j in n - rank_deficit..n {
            b[(i, j)] = 0.0;
        }
    }
    b.matmul(&b.transpose())
}

fn fcd_numerics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let n = 1 + (k * 13) % 64;
        let m = random_psd(&mut rng, n, (k % 3).min(n - 1));
        let r = sqrt_psd(&m).map_err(|e| format!("sqrt failed: {e}"))?;
        let err = r.matmul(&r).sub(&m).frobenius() / m.frobenius();
        worst = worst.max(err);
        ensure!(err <= 1e-7, "dim {n}: reconstruction error {err:e}");
    }
    for k in 0..50 {
        let n = 1 + k % 32;
        let summary = |rng: &mut ChaCha8Rng| GaussianSummary {
            mean: (0..n).map(|_| normal(rng)).collect(),
            covariance: random_psd(rng, n, 0),
            sample_count: 100,
        };
        let (a, b) = (summary(&mut rng), summary(&mut rng));
        let d = |x: &GaussianSummary, y: &GaussianSummary| frechet_distance(x, y).map_err(|e| e.to_string());
        let (ab, ba) = (d(&a, &b)?, d(&b, &a)?);
        ensure!(close(ab, ba, 1e-8 * (1.0 + ab)), "asymmetric: {ab} vs {ba}");
        let aa = d(&a, &a)?;
        ensure!(aa <= 1e-8, "d(a, a) = {aa:e}");
        let offset: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let unit = |mean: Vec<f64>| GaussianSummary { mean, covariance: Matrix::identity(n), sample_count: 2 };
        let norm2: f64 = offset.iter().map(|x| x * x).sum();
        let got = d(&unit(vec![0.0; n]), &unit(offset))?;
        ensure!(close(got, norm2, 1e-8), "mean offset {got} vs {norm2}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("worst sqrt error {worst:.1e}, {elapsed:.2?}"))
}

fn corpus_lines(n: usize) -> (Vec<String>, Vec<String>) {
    let text =
        (0..n).map(|i| (0..3 + i % 50).map(|j| format!("w{}", (i * 31 + j) % 211)).collect::<Vec<_>>().join(" "));
    let smiles = common::corpus().into_iter().cycle().take(n).map(str::to_string);
    (text.collect(), smiles.collect())
}

fn corruptor_suite(bin: &Path, dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for i in 0..10_000u64 {
        let tokens: Vec<String> = (0..2 + below(&mut rng, 511)).map(|_| format!("t{}", below(&mut rng, 30))).collect();
        let config = CorruptionConfig { n_sentinels: 1000, seed: i, ..Default::default() };
        let ex = corrupt(&tokens, moltext::text::Origin::Text, &config, &mut example_rng(i, 0, 0, 0))
            .map_err(|e| e.to_string())?;
        ensure!(decorrupt(&ex).as_ref() == Ok(&tokens), "round trip failed for sequence {i}");
    }
    let config = CorruptionConfig::default();
    let tokens: Vec<String> = (0..512).map(|i| format!("w{i}")).collect();
    for i in 0..1000u64 {
        let ex = corrupt(&tokens, moltext::text::Origin::Text, &config, &mut example_rng(1, 0, 0, i))
            .map_err(|e| e.to_string())?;
        let kept = ex.input_tokens.iter().filter(|t| !t.starts_with("<extra_id_")).count();
        let fraction = (512 - kept) as f64 / 512.0;
        ensure!((0.14..=0.16).contains(&fraction), "corrupted fraction {fraction}");
    }
    let (text, smiles) = corpus_lines(300);
    let batch = mixed_batch(
        &mut text.clone().into_iter(),
        &mut smiles.clone().into_iter(),
        256,
        &config,
        BatchIndex::default(),
    )
    .map_err(|e| e.to_string())?;
    let n_text = batch.iter().filter(|e| e.source_modality == moltext::text::Origin::Text).count();
    ensure!(batch.len() == 256 && n_text == 128, "split {n_text} text of {}", batch.len());
    ensure!(batch.iter().all(|e| !to_tsv_line(e).is_empty()), "empty TSV line");

    std::fs::write(dir.join("c.txt"), text.join("\n")).unwrap();
    std::fs::write(dir.join("c.smi"), smiles.join("\n")).unwrap();
    let run = |out: &str, jobs: &str| {
        let status = Command::new(bin)
            .args(["corrupt", "--text", "c.txt", "--smiles", "c.smi", "--batch-size", "256", "--rate", "0.15"])
            .args(["--mean-span", "3", "--seed", "11", "--jobs", jobs, "--out", out])
            .current_dir(dir)
            .output()
            .unwrap();
        std::fs::read(dir.join(out)).map_err(|_| String::from_utf8_lossy(&status.stderr).into_owned())
    };
    let (a, b) = (run("a.tsv", "1")?, run("b.tsv", "4")?);
    ensure!(!a.is_empty() && a == b, "CLI outputs differ");
    Ok(format!("10000 round trips, 128/128 split, {} identical bytes", a.len()))
}

fn retrieval_suite() -> Outcome {
    let dim = 12;
    let mut queries = EmbeddingTable::new(dim);
    let mut corpus = EmbeddingTable::new(dim);
    let mut gold = Vec::new();
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        queries.insert(format!("q{i}"), v.clone()).unwrap();
        corpus.insert(format!("c{i}"), v).unwrap();
        gold.push((format!("q{i}"), format!("c{i}")));
    }
    let r = rank_retrieval(&queries, &corpus, &gold, &[1]).map_err(|e| e.to_string())?;
    ensure!(r.mean_rank == 1.0 && r.mrr == 1.0 && r.hits[&1] == 1.0, "one-hot: {r:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let items: Vec<(String, Vec<f64>)> = (0..50)
        .map(|i| (format!("item{i:02}"), (0..6).map(|_| (normal(&mut rng) * 2.0).round() / 2.0).collect()))
        .collect();
    let mut corpus = EmbeddingTable::new(6);
    for &i in &shuffled(&mut rng, 50) {
        corpus.insert(items[i].0.clone(), items[i].1.clone()).unwrap();
    }
    let mut queries = EmbeddingTable::new(6);
    let mut gold = Vec::new();
    let mut expected = Vec::new();
    for q in 0..50 {
        let v: Vec<f64> = (0..6).map(|_| normal(&mut rng)).collect();
        let g = &items[below(&mut rng, 50)].0;
        let cos = |u: &[f64]| {
            let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            dot / (u.iter().map(|a| a * a).sum::<f64>().sqrt() * v.iter().map(|a| a * a).sum::<f64>().sqrt())
        };
        let mut order: Vec<(f64, &str)> = items
            .iter()
            .map(|(id, u)| (if u.iter().all(|x| *x == 0.0) { f64::NEG_INFINITY } else { cos(u) }, id.as_str()))
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        expected.push(1 + order.iter().position(|(_, id)| id == g).unwrap());
        queries.insert(format!("q{q}"), v).unwrap();
        gold.push((format!("q{q}"), g.clone()));
    }
    let r = rank_retrieval(&queries, &corpus, &gold, &[1, 10]).map_err(|e| e.to_string())?;
    let got: Vec<usize> = r.ranks.iter().map(|x| x.rank).collect();
    ensure!(got == expected, "ranks differ from brute force");
    let mean = expected.iter().sum::<usize>() as f64 / 50.0;
    ensure!(close(r.mean_rank, mean, 1e-12), "mean rank {} vs {mean}", r.mean_rank);
    Ok(format!("one-hot exact; 50-item brute force, mean rank {mean}"))
}

/// Two-sided p by Simpson integration of the t density.
fn p_oracle(t: f64, df: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let f = |x: f64| (ln_c - (df + 1.0) / 2.0 * (x * x / df).ln_1p()).exp();
    let n = 20_000;
    let h = t.abs() / n as f64;
    let inner: f64 = (1..n).map(|i| f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    1.0 - 2.0 * (f(0.0) + f(t.abs()) + inner) * h / 3.0
}

fn significance_suite() -> Outcome {
    let r = significance(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5], TestMode::Paired).map_err(|e| e.to_string())?;
    ensure!(close(r.t, 4.2426, 1e-4), "t = {}", r.t);
    let oracle = p_oracle(r.t, 4.0);
    ensure!(close(r.p, oracle, 1e-3) && close(r.p, 0.0132, 1e-3), "p = {} (oracle {oracle})", r.p);
    ensure!(close(two_sided_p(r.t, 4.0), oracle, 1e-9), "incomplete beta vs integration");
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for mode in [TestMode::Paired, TestMode::Independent] {
        for _ in 0..100 {
            let n = 2 + below(&mut rng, 30);
            let a: Vec<f64> = (0..n).map(|_| uniform(&mut rng)).collect();
            let b: Vec<f64> = (0..n).map(|_| uniform(&mut rng) + 0.1).collect();
            let (ab, ba) = (significance(&a, &b, mode).unwrap(), significance(&b, &a, mode).unwrap());
            ensure!(close(ab.t, -ba.t, 1e-12) && close(ab.p, ba.p, 1e-12), "{mode:?} asymmetric");
            let same = significance(&a, &a, mode).unwrap();
            ensure!(same.t == 0.0 && same.p == 1.0, "{mode:?} identical inputs gave {same:?}");
        }
    }
    Ok(format!("t {:.4}, p {:.4} (oracle {oracle:.4})", r.t, r.p))
}

fn cli_determinism(bin: &Path, dir: &Path) -> Outcome {
    let corpus = common::corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let records: Vec<EvalRecord> = corpus
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pred = match below(&mut rng, 4) {
                0 => "C1CC(".to_string(),
                1 => corpus[below(&mut rng, corpus.len())].to_string(),
                _ => s.to_string(),
            };
            EvalRecord::new(&format!("m{i}"), "a description", s, &pred)
        })
        .collect();
    std::fs::write(dir.join("preds.tsv"), write_records(&records)).unwrap();
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    std::fs::write(dir.join("gt.emb"), self_embeddings(&ids, 8, 3).to_text()).unwrap();
    std::fs::write(dir.join("pred.emb"), self_embeddings(&ids, 8, 4).to_text()).unwrap();

    let run = |tag: &str, jobs: &str| -> Result<Vec<u8>, String> {
        let exec = |args: &[&str]| -> Result<Vec<u8>, String> {
            let out = Command::new(bin).args(args).args(["--jobs", jobs]).current_dir(dir).output().unwrap();
            ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
            Ok(out.stdout)
        };
        let (report, per) = (format!("{tag}.json"), format!("{tag}.tsv"));
        exec(&["eval-molgen", "preds.tsv", "--embeddings", "gt:gt.emb", "--embeddings", "pred:pred.emb"])
            .and_then(|_| exec(&["eval-molgen", "preds.tsv", "--out", &report, "--per-example", &per]))?;
        let mut all = std::fs::read(dir.join(&report)).unwrap();
        all.extend(exec(&["eval-molgen", "preds.tsv", "--embeddings", "gt:gt.emb", "--embeddings", "pred:pred.emb"])?);
        all.extend(exec(&["normalize", &report])?);
        all.extend(exec(&["significance", &per, &per, "--metric", "maccs_fts", "--mode", "independent"])?);
        all.extend(std::fs::read(dir.join(&per)).unwrap());
        Ok(all)
    };
    let (a, b) = (run("one", "1")?, run("two", "4")?);
    ensure!(a == b, "runs differ");
    Ok(format!("{} identical bytes across two runs", a.len()))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let bin = Path::new(env!("CARGO_BIN_EXE_moltext"));
    let substitutes = "model-dependent table values are not reproducible without trained models";
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "ground-truth identity row", Box::new(ground_truth_identity)),
        (2, "normalization arithmetic", Box::new(normalization_arithmetic)),
        (4, "parser property suite", Box::new(parser_properties)),
        (5, "metric oracle suite", Box::new(metric_oracles)),
        (6, "FCD numerics", Box::new(fcd_numerics)),
        (7, "corruptor suite", Box::new(|| corruptor_suite(bin, dir.path()))),
        (8, "retrieval suite", Box::new(retrieval_suite)),
        (9, "significance suite", Box::new(significance_suite)),
        (10, "CLI determinism", Box::new(|| cli_determinism(bin, dir.path()))),
    ];
    let mut results = BTreeMap::new();
    for (id, name, check) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        results.insert(*id, (*name, outcome));
    }
    let substituted = [4, 5, 6, 7, 8, 9].iter().all(|id| results[id].1.is_ok());
    results.insert(
        3,
        (
            "non-reproducible values substituted",
            if substituted { Ok(format!("{substitutes}; criteria 4-9 pass")) } else { Err(substitutes.into()) },
        ),
    );
    // Written to the stdout handle directly so the lines survive output capture.
    let mut report = String::from("\n");
    let mut failed = Vec::new();
    for (id, (name, outcome)) in &results {
        match outcome {
            Ok(detail) => report.push_str(&format!("PASS  {id:>2}  {name}: {detail}\n")),
            Err(why) => {
                report.push_str(&format!("FAIL  {id:>2}  {name}: {why}\n"));
                failed.push(*id);
            }
        }
    }
    std::io::stdout().write_all(report.as_bytes()).unwrap();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
