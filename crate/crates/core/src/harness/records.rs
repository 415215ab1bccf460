//! Prediction files: UTF-8 TSV with a header line and backslash escapes
//! (`\t`, `\n`, `\r`, `\\`) inside fields.

use std::collections::HashSet;

use super::HarnessError;

pub const RECORD_HEADER: [&str; 4] = ["id", "input", "ground_truth", "prediction"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRecord {
    pub id: String,
    pub input: String,
    pub ground_truth: String,
    pub prediction: String,
    /// 1-based line in the source file, 0 for records built in memory.
    pub line: usize,
}

impl EvalRecord {
    pub fn new(id: &str, input: &str, ground_truth: &str, prediction: &str) -> EvalRecord {
        EvalRecord {
            id: id.into(),
            input: input.into(),
            ground_truth: ground_truth.into(),
            prediction: prediction.into(),
            line: 0,
        }
    }
}

/// A record with its beam candidates in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRecord {
    pub id: String,
    pub input: String,
    pub ground_truth: String,
    pub candidates: Vec<String>,
    pub line: usize,
}

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

pub fn unescape_field(s: &str, line: usize) -> Result<String, HarnessError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                let shown = other.map(|c| format!("\\{c}")).unwrap_or_else(|| "trailing \\".into());
                return Err(HarnessError::input(line, format!("bad escape {shown}")));
            }
        }
    }
    Ok(out)
}

/// Splits into numbered, unescaped rows after validating the header.
fn rows(
    text: &str,
    check_header: impl Fn(&[&str]) -> Result<(), String>,
) -> Result<Vec<(usize, Vec<String>)>, HarnessError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    let (_, header) = lines.next().ok_or_else(|| HarnessError::input(1, "empty file"))?;
    let names: Vec<&str> = header.split('\t').collect();
    check_header(&names).map_err(|m| HarnessError::input(1, m))?;
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != names.len() {
            return Err(HarnessError::input(n, format!("expected {} fields, found {}", names.len(), fields.len())));
        }
        let fields = fields.iter().map(|f| unescape_field(f, n)).collect::<Result<_, _>>()?;
        out.push((n, fields));
    }
    Ok(out)
}

fn check_unique<'a>(ids: impl Iterator<Item = (usize, &'a str)>) -> Result<(), HarnessError> {
    let mut seen = HashSet::new();
    for (line, id) in ids {
        if id.is_empty() {
            return Err(HarnessError::input(line, "empty id"));
        }
        if !seen.insert(id) {
            return Err(HarnessError::input(line, format!("duplicate id {id:?}")));
        }
    }
    Ok(())
}

pub fn parse_records(text: &str) -> Result<Vec<EvalRecord>, HarnessError> {
    let rows = rows(text, |names| {
        if names == RECORD_HEADER {
            Ok(())
        } else {
            Err(format!("expected header {:?}", RECORD_HEADER.join("\t")))
        }
    })?;
    let records: Vec<EvalRecord> = rows
        .into_iter()
        .map(|(line, mut f)| EvalRecord {
            prediction: f.pop().unwrap(),
            ground_truth: f.pop().unwrap(),
            input: f.pop().unwrap(),
            id: f.pop().unwrap(),
            line,
        })
        .collect();
    check_unique(records.iter().map(|r| (r.line, r.id.as_str())))?;
    Ok(records)
}

/// Parses `id, input, ground_truth, pred_1 … pred_k` files.
pub fn parse_candidates(text: &str) -> Result<Vec<CandidateRecord>, HarnessError> {
    let rows = rows(text, |names| {
        let beams = names.get(3..).unwrap_or_default();
        let numbered = beams.iter().enumerate().all(|(i, n)| *n == format!("pred_{}", i + 1));
        if names.len() > 3 && names[..3] == RECORD_HEADER[..3] && numbered {
            Ok(())
        } else {
            Err("expected header id, input, ground_truth, pred_1 … pred_k".into())
        }
    })?;
    let records: Vec<CandidateRecord> = rows
        .into_iter()
        .map(|(line, f)| {
            let mut f = f.into_iter();
            CandidateRecord {
                id: f.next().unwrap(),
                input: f.next().unwrap(),
                ground_truth: f.next().unwrap(),
                candidates: f.collect(),
                line,
            }
        })
        .collect();
    check_unique(records.iter().map(|r| (r.line, r.id.as_str())))?;
    Ok(records)
}

pub fn write_records(records: &[EvalRecord]) -> String {
    let mut out = RECORD_HEADER.join("\t");
    out.push('\n');
    for r in records {
        let fields = [&r.id, &r.input, &r.ground_truth, &r.prediction].map(|f| escape_field(f));
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}
