use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Caption,
    Molgen,
}

/// Which records a metric value was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    All,
    ValidOnly,
    /// A valid-only value rescaled by validity.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Better {
    Higher,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    /// `None` when the metric is undefined; `note` says why.
    pub value: Option<f64>,
    pub population: Population,
    pub better: Better,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MetricValue {
    pub fn new(value: f64, population: Population, better: Better) -> MetricValue {
        MetricValue { value: Some(value), population, better, note: None }
    }

    pub fn undefined(population: Population, better: Better, note: impl Into<String>) -> MetricValue {
        MetricValue { value: None, population, better, note: Some(note.into()) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> MetricValue {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: Task,
    pub metrics: BTreeMap<String, MetricValue>,
    pub n_records: usize,
    pub n_valid: usize,
    pub config_fingerprint: String,
    pub normalized: bool,
    /// Record ids, aligned with every `per_example` series.
    #[serde(skip)]
    pub ids: Vec<String>,
    /// Per-record values; `None` where a record was outside the population.
    #[serde(skip)]
    pub per_example: BTreeMap<String, Vec<Option<f64>>>,
}

/// Rounds to 6 significant digits, the precision of every emitted number.
pub fn six_digits(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = six_digits(n.as_f64().unwrap());
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and numbers rounded to 6 significant digits.
pub fn to_stable_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("serializable");
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

pub fn format_value(x: Option<f64>) -> String {
    match x {
        Some(x) if x.is_finite() => format!("{}", six_digits(x)),
        Some(x) => format!("{x}"),
        None => "undefined".into(),
    }
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        to_stable_json(self)
    }

    pub fn from_json(text: &str) -> Result<MetricReport, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::input(e.line(), e.to_string()))
    }

    pub fn validity(&self) -> Option<f64> {
        self.metrics.get("validity").and_then(|m| m.value)
    }

    /// Human-readable aligned table.
    pub fn to_table(&self) -> String {
        let task = match self.task {
            Task::Caption => "caption",
            Task::Molgen => "molgen",
        };
        let mut out = format!(
            "task {task}  records {}  valid {}  config {}{}\n",
            self.n_records,
            self.n_valid,
            self.config_fingerprint,
            if self.normalized { "  (normalized)" } else { "" }
        );
        let width = self.metrics.keys().map(String::len).max().unwrap_or(6).max(6);
        writeln!(out, "{:<width$}  {:>12}  {:<10}  note", "metric", "value", "population").unwrap();
        for (name, m) in &self.metrics {
            let population = match m.population {
                Population::All => "all",
                Population::ValidOnly => "valid_only",
                Population::Normalized => "normalized",
            };
            let line = format!(
                "{name:<width$}  {:>12}  {population:<10}  {}",
                format_value(m.value),
                m.note.as_deref().unwrap_or("")
            );
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// `id` plus one column per per-example series; empty cells mark records
    /// outside a metric's population.
    pub fn per_example_tsv(&self) -> String {
        let mut out = String::from("id");
        for name in self.per_example.keys() {
            out.push('\t');
            out.push_str(name);
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(&super::records::escape_field(id));
            for series in self.per_example.values() {
                out.push('\t');
                if let Some(x) = series[i] {
                    write!(out, "{x:?}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Reads one column of a per-example TSV as `(id, value)` pairs.
pub fn parse_per_example(text: &str, metric: &str) -> Result<Vec<(String, Option<f64>)>, HarnessError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| HarnessError::input(1, "empty file"))?;
    let names: Vec<&str> = header.split('\t').collect();
    if names.first() != Some(&"id") {
        return Err(HarnessError::input(1, "first column must be `id`"));
    }
    let col = names
        .iter()
        .position(|n| *n == metric)
        .filter(|&c| c > 0)
        .ok_or_else(|| HarnessError::input(1, format!("no column {metric:?}")))?;
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != names.len() {
            return Err(HarnessError::input(n, format!("expected {} fields, found {}", names.len(), fields.len())));
        }
        let value = match fields[col] {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|_| HarnessError::input(n, format!("bad number {v:?}")))?),
        };
        out.push((super::records::unescape_field(fields[0], n)?, value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricReport {
        let mut metrics = BTreeMap::new();
        metrics.insert("validity".into(), MetricValue::new(0.635, Population::All, Better::Higher));
        metrics.insert("maccs_fts".into(), MetricValue::new(0.811, Population::ValidOnly, Better::Higher));
        metrics.insert("fcd".into(), MetricValue::undefined(Population::ValidOnly, Better::Lower, "no embeddings"));
        MetricReport {
            task: Task::Molgen,
            metrics,
            n_records: 3,
            n_valid: 2,
            config_fingerprint: "abc".into(),
            normalized: false,
            ids: vec!["a".into(), "b".into(), "c".into()],
            per_example: BTreeMap::from([("exact".into(), vec![Some(1.0), None, Some(0.0)])]),
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(six_digits(0.811 * 0.635), 0.514985);
        assert_eq!(six_digits(2.99 / 0.635), 4.70866);
        assert_eq!(six_digits(1.0), 1.0);
        assert_eq!(six_digits(123456789.0), 123457000.0);
    }

    #[test]
    fn json_is_sorted_and_round_trips() {
        let r = sample();
        let json = r.to_json();
        let keys: Vec<usize> = ["config_fingerprint", "metrics", "n_records", "n_valid", "normalized", "task"]
            .iter()
            .map(|k| json.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        let back = MetricReport::from_json(&json).unwrap();
        assert_eq!(back.metrics, r.metrics);
        assert_eq!(back.validity(), Some(0.635));
    }

    #[test]
    fn per_example_round_trip() {
        let tsv = sample().per_example_tsv();
        assert_eq!(tsv, "id\texact\na\t1.0\nb\t\nc\t0.0\n");
        let col = parse_per_example(&tsv, "exact").unwrap();
        assert_eq!(col[1], ("b".into(), None));
        assert!(parse_per_example(&tsv, "bleu").is_err());
    }

    #[test]
    fn table_lists_every_metric() {
        let t = sample().to_table();
        assert!(t.contains("maccs_fts") && t.contains("0.811") && t.contains("undefined"));
    }
}
