//! Command-line front end: metric evaluation, significance tests, SMILES
//! utilities and span-corruption data generation.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use moltext::corrupt::{mixed_batch, to_tsv_line, BatchIndex, CorruptError, CorruptionConfig};
use moltext::embed::{EmbedError, EmbeddingTable};
use moltext::fingerprint::{Family, FingerprintError, FpKind, DEFAULT_BITS, DEFAULT_PATH_LEN, DEFAULT_RADIUS};
use moltext::harness::report::{format_value, to_stable_json};
use moltext::harness::{
    eval_caption, eval_molgen, normalize_by_validity, parse_candidates, parse_per_example, parse_records,
    select_records, significance, write_records, Embeddings, EvalOptions, FpParams, HarnessError, MetricReport,
    TestMode,
};
use moltext::retrieval::{parse_gold, rank_retrieval, RetrievalError};
use moltext::smiles::{canonicalize, parse};

#[derive(Parser)]
#[command(name = "moltext", version, about = "Molecule/text translation evaluation toolkit")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Embedding table tagged with its role, `gt:FILE` or `pred:FILE`.
    #[arg(long = "embeddings", global = true, value_name = "ROLE:FILE")]
    embeddings: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Paired,
    Independent,
}

#[derive(Args)]
struct ReportOut {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write per-record metric values as TSV.
    #[arg(long, value_name = "FILE")]
    per_example: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Score generated captions against reference captions.
    EvalCaption {
        predictions: PathBuf,
        /// Replace a leading molecule name in references with "The molecule is".
        #[arg(long)]
        strip_names: bool,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Score generated SMILES against reference SMILES.
    EvalMolgen {
        predictions: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        morgan_radius: u32,
        #[arg(long, default_value_t = DEFAULT_BITS)]
        morgan_bits: usize,
        #[arg(long, default_value_t = DEFAULT_PATH_LEN)]
        path_length: u32,
        #[arg(long, default_value_t = DEFAULT_BITS)]
        path_bits: usize,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Rescale the valid-only metrics of a molgen report by its validity.
    Normalize {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep the first parseable beam of every record in a candidate file.
    SelectValid {
        candidates: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-sided t-test on one metric column of two per-example files.
    Significance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long, value_enum, default_value_t = Mode::Paired)]
        mode: Mode,
    },
    /// Canonical SMILES for each line of a file.
    Canonicalize { input: PathBuf },
    /// Hex-encoded fingerprint for each SMILES line of a file.
    Fingerprint {
        input: PathBuf,
        #[arg(long, default_value = "morgan")]
        family: String,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: u32,
        /// Maximum path length in bonds for the path family.
        #[arg(long, default_value_t = DEFAULT_PATH_LEN)]
        max_len: u32,
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: usize,
    },
    /// Span-corrupted pretraining pairs from a text and a SMILES corpus.
    Corrupt {
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        smiles: PathBuf,
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.15)]
        rate: f64,
        #[arg(long, default_value_t = 3.0)]
        mean_span: f64,
        #[arg(long, default_value_t = 100)]
        sentinels: usize,
        #[arg(long, default_value_t = 512)]
        max_len: usize,
        /// Number of batches; by default every full batch the corpora allow.
        #[arg(long)]
        batches: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean rank, MRR and Hits@k of gold items under cosine similarity.
    RetrievalEval {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        k: Vec<usize>,
        /// Write per-query ranks as TSV.
        #[arg(long)]
        ranks: Option<PathBuf>,
    },
}

/// An error message with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }

    fn config(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Failure {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

impl From<EmbedError> for Failure {
    fn from(e: EmbedError) -> Failure {
        Failure::input(e.to_string())
    }
}

impl From<FingerprintError> for Failure {
    fn from(e: FingerprintError) -> Failure {
        Failure::config(e.to_string())
    }
}

impl From<RetrievalError> for Failure {
    fn from(e: RetrievalError) -> Failure {
        match e {
            RetrievalError::ZeroK => Failure::config(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<CorruptError> for Failure {
    fn from(e: CorruptError) -> Failure {
        match e {
            CorruptError::Config(_) | CorruptError::BatchSize(_) => Failure::config(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write(path, contents),
        None => io::stdout().write_all(contents.as_bytes()).map_err(|e| Failure::input(format!("stdout: {e}"))),
    }
}

/// Prefixes input errors with the file they came from.
fn in_file<T>(path: &Path, r: std::result::Result<T, HarnessError>) -> Result<T> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        if f.code == 1 {
            f.message = format!("{}: {}", path.display(), f.message);
        }
        f
    })
}

fn load_embeddings(specs: &[String]) -> Result<Option<Embeddings>> {
    let (mut gt, mut pred) = (None, None);
    for spec in specs {
        let (role, file) = spec
            .split_once(':')
            .ok_or_else(|| Failure::config(format!("--embeddings {spec:?}: expected gt:FILE or pred:FILE")))?;
        let slot = match role {
            "gt" => &mut gt,
            "pred" => &mut pred,
            _ => return Err(Failure::config(format!("--embeddings: unknown role {role:?}"))),
        };
        if slot.is_some() {
            return Err(Failure::config(format!("--embeddings: role {role} given twice")));
        }
        let table = EmbeddingTable::load(Path::new(file)).map_err(|e| match e {
            EmbedError::Io { .. } => Failure::from(e),
            _ => Failure::input(format!("{file}: {e}")),
        })?;
        *slot = Some(table);
    }
    match (gt, pred) {
        (Some(gt), Some(pred)) => Ok(Some(Embeddings { gt, pred })),
        (None, None) => Ok(None),
        _ => Err(Failure::config("--embeddings needs both a gt: and a pred: table")),
    }
}

fn render(report: &MetricReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Table => report.to_table(),
    }
}

fn finish_report(report: &MetricReport, out: &ReportOut, format: Format) -> Result<()> {
    if let Some(path) = &out.per_example {
        write(path, &report.per_example_tsv())?;
    }
    emit(out.out.as_deref(), &render(report, format))
}

/// Renders flat key/value output in either format.
fn render_value(value: &serde_json::Value, format: Format) -> String {
    if format == Format::Json {
        return to_stable_json(value);
    }
    let serde_json::Value::Object(map) = value else {
        return format!("{value}\n");
    };
    let width = map.keys().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in map {
        let shown = match v {
            serde_json::Value::Number(n) => format_value(n.as_f64()),
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Null => "-".into(),
            other => other.to_string(),
        };
        writeln!(out, "{k:<width$}  {shown}").unwrap();
    }
    out
}

fn smiles_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::config("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(|e| Failure::config(e.to_string()))?;
    }
    let format = cli.format;
    match cli.command {
        Command::EvalCaption { predictions, strip_names, out } => {
            let records = in_file(&predictions, parse_records(&read(&predictions)?))?;
            let options =
                EvalOptions { strip_names, embeddings: load_embeddings(&cli.embeddings)?, ..Default::default() };
            let report = in_file(&predictions, eval_caption(&records, &options))?;
            finish_report(&report, &out, format)
        }
        Command::EvalMolgen { predictions, morgan_radius, morgan_bits, path_length, path_bits, out } => {
            FpKind::morgan(morgan_radius, morgan_bits)?;
            FpKind::path(path_length, path_bits)?;
            let records = in_file(&predictions, parse_records(&read(&predictions)?))?;
            let options = EvalOptions {
                morgan: FpParams { size: morgan_radius, bits: morgan_bits },
                path: FpParams { size: path_length, bits: path_bits },
                embeddings: load_embeddings(&cli.embeddings)?,
                ..Default::default()
            };
            let report = in_file(&predictions, eval_molgen(&records, &options))?;
            finish_report(&report, &out, format)
        }
        Command::Normalize { report, out } => {
            let parsed = in_file(&report, MetricReport::from_json(&read(&report)?))?;
            let normalized = normalize_by_validity(&parsed)?;
            emit(out.as_deref(), &render(&normalized, format))
        }
        Command::SelectValid { candidates, out } => {
            let records = in_file(&candidates, parse_candidates(&read(&candidates)?))?;
            let (selected, picks) = in_file(&candidates, select_records(&records))?;
            let valid = picks.iter().filter(|p| p.is_valid()).count();
            eprintln!("{valid} of {} records have a valid candidate", picks.len());
            emit(out.as_deref(), &write_records(&selected))
        }
        Command::Significance { a, b, metric, mode } => {
            let xs = in_file(&a, parse_per_example(&read(&a)?, &metric))?;
            let ys = in_file(&b, parse_per_example(&read(&b)?, &metric))?;
            let (mode, va, vb, dropped) = match mode {
                Mode::Paired => {
                    let ids_a: Vec<&String> = xs.iter().map(|(id, _)| id).collect();
                    let ids_b: Vec<&String> = ys.iter().map(|(id, _)| id).collect();
                    if ids_a != ids_b {
                        return Err(Failure::input(
                            "paired test needs both files to list the same ids in the same order",
                        ));
                    }
                    let pairs: Vec<(f64, f64)> =
                        xs.iter().zip(&ys).filter_map(|((_, x), (_, y))| Some(((*x)?, (*y)?))).collect();
                    let dropped = xs.len() - pairs.len();
                    let (va, vb) = pairs.into_iter().unzip();
                    (TestMode::Paired, va, vb, dropped)
                }
                Mode::Independent => {
                    let va: Vec<f64> = xs.iter().filter_map(|(_, v)| *v).collect();
                    let vb: Vec<f64> = ys.iter().filter_map(|(_, v)| *v).collect();
                    let dropped = xs.len() + ys.len() - va.len() - vb.len();
                    (TestMode::Independent, va, vb, dropped)
                }
            };
            let test = significance(&va, &vb, mode)?;
            let value = json!({
                "metric": metric,
                "mode": mode,
                "n_a": va.len(),
                "n_b": vb.len(),
                "dropped": dropped,
                "t": test.t,
                "p": test.p,
                "df": test.df,
                "mean_difference": test.mean_difference,
                "warning": test.warning,
            });
            emit(None, &render_value(&value, format))
        }
        Command::Canonicalize { input } => {
            let text = read(&input)?;
            let mut out = String::new();
            for (line, smiles) in smiles_lines(&text) {
                let mol = parse(smiles)
                    .map_err(|e| Failure::input(format!("{}: line {line}: {smiles:?}: {e}", input.display())))?;
                out.push_str(&canonicalize(&mol));
                out.push('\n');
            }
            emit(None, &out)
        }
        Command::Fingerprint { input, family, radius, max_len, bits } => {
            let kind = match family.parse::<Family>()? {
                Family::Maccs => FpKind::Maccs,
                Family::Path => FpKind::path(max_len, bits)?,
                Family::Morgan => FpKind::morgan(radius, bits)?,
            };
            let text = read(&input)?;
            let mut out = String::new();
            for (line, smiles) in smiles_lines(&text) {
                let mol = parse(smiles)
                    .map_err(|e| Failure::input(format!("{}: line {line}: {smiles:?}: {e}", input.display())))?;
                out.push_str(&kind.compute(&mol).bits.to_hex());
                out.push('\n');
            }
            emit(None, &out)
        }
        Command::Corrupt { text, smiles, batch_size, rate, mean_span, sentinels, max_len, batches, out } => {
            let config = CorruptionConfig {
                corruption_rate: rate,
                mean_span_length: mean_span,
                n_sentinels: sentinels,
                seed: cli.seed,
                max_seq_len: max_len,
            };
            let text = read(&text)?;
            let smiles = read(&smiles)?;
            let mut text_stream = text.lines().map(str::to_string);
            let mut smiles_stream = smiles.lines().map(str::to_string);
            let mut tsv = String::new();
            let mut batch = 0;
            while batches.is_none_or(|n| batch < n) {
                let index = BatchIndex { epoch: 0, batch };
                match mixed_batch(&mut text_stream, &mut smiles_stream, batch_size, &config, index) {
                    Ok(examples) => {
                        for e in &examples {
                            tsv.push_str(&to_tsv_line(e));
                            tsv.push('\n');
                        }
                    }
                    Err(CorruptError::StreamExhausted(_)) if batches.is_none() && batch > 0 => break,
                    Err(e) => return Err(e.into()),
                }
                batch += 1;
            }
            write(&out, &tsv)?;
            eprintln!("wrote {batch} batches of {batch_size} examples to {}", out.display());
            Ok(())
        }
        Command::RetrievalEval { queries, corpus, gold, k, ranks } => {
            let load = |path: &Path| {
                EmbeddingTable::load(path).map_err(|e| match e {
                    EmbedError::Io { .. } => Failure::from(e),
                    _ => Failure::input(format!("{}: {e}", path.display())),
                })
            };
            let (q, c) = (load(&queries)?, load(&corpus)?);
            let g = parse_gold(&read(&gold)?).map_err(|e| Failure::input(format!("{}: {e}", gold.display())))?;
            let result = rank_retrieval(&q, &c, &g, &k)?;
            if let Some(path) = ranks {
                write(&path, &result.ranks_tsv())?;
            }
            let mut value = json!({
                "mean_rank": result.mean_rank,
                "mrr": result.mrr,
                "n_queries": result.n_queries,
                "excluded": result.excluded,
            });
            for (k, hits) in &result.hits {
                value[format!("hits@{k}")] = json!(hits);
            }
            emit(None, &render_value(&value, format))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
