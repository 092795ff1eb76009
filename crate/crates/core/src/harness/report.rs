use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalRecord;
use crate::encoding::EncodingKind;
use crate::graphgen::GeneratorKind;
use crate::prompting::Method;
use crate::tasks::{Answer, TaskKind};

/// Exact match; connected nodes compare as sets. A missing prediction is
/// always wrong.
pub fn score(prediction: Option<&Answer>, truth: &Answer) -> bool {
    prediction == Some(truth)
}

/// Which dimension the report columns run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    Encoding,
    Generator,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "encoding" => Ok(Axis::Encoding),
            "generator" => Ok(Axis::Generator),
            other => Err(format!("unknown axis `{other}` (expected encoding or generator)")),
        }
    }
}

/// Rounds to one decimal, halves upward.
pub fn round1(x: f64) -> f64 {
    // The nudge keeps values such as 72.25, stored as 72.2499…, rounding up.
    ((x * 10.0) + 1e-9).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub key: String,
    pub correct: usize,
    pub total: usize,
    /// `None` when the cell has no records.
    pub accuracy: Option<f64>,
}

/// One task × method row across the cells of one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub task: TaskKind,
    pub method: Method,
    pub cells: Vec<Cell>,
    /// Mean of the present cell accuracies (unrounded).
    pub mu: Option<f64>,
    /// Best minus worst present cell accuracy (unrounded).
    pub delta: Option<f64>,
}

/// `(μ, δ)` over cell accuracies in percent.
pub fn mu_delta(accuracies: &[f64]) -> Option<(f64, f64)> {
    if accuracies.is_empty() {
        return None;
    }
    let mu = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    let max = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = accuracies.iter().copied().fold(f64::INFINITY, f64::min);
    Some((mu, max - min))
}

fn axis_order(axis: Axis, key: &str) -> usize {
    match axis {
        Axis::Encoding => EncodingKind::ALL.iter().position(|k| k.as_str() == key),
        Axis::Generator => GeneratorKind::ALL.iter().position(|k| k.as_str() == key),
    }
    .unwrap_or(usize::MAX)
}

/// Groups records by task and method, with one cell per axis value.
///
/// Every row gets the same columns: all axis values seen in any record.
/// A row without records for a column reports it as missing and leaves it
/// out of μ and δ, with a warning.
pub fn aggregate(records: &[EvalRecord], axis: Axis) -> Vec<ReportRow> {
    let key_of = |r: &EvalRecord| match axis {
        Axis::Encoding => r.encoding.as_str().to_string(),
        Axis::Generator => r.generator.map(|g| g.as_str().to_string()).unwrap_or_else(|| "unknown".into()),
    };
    let mut columns: Vec<String> = records.iter().map(key_of).collect::<BTreeSet<_>>().into_iter().collect();
    columns.sort_by_key(|k| (axis_order(axis, k), k.clone()));

    let mut groups: BTreeMap<(TaskKind, Method), BTreeMap<String, (usize, usize)>> = BTreeMap::new();
    for r in records {
        let cell = groups.entry((r.task, r.method)).or_default().entry(key_of(r)).or_default();
        cell.1 += 1;
        if r.correct {
            cell.0 += 1;
        }
    }
    groups
        .into_iter()
        .map(|((task, method), counts)| {
            let cells: Vec<Cell> = columns
                .iter()
                .map(|key| {
                    let (correct, total) = counts.get(key).copied().unwrap_or((0, 0));
                    if total == 0 {
                        tracing::warn!(%task, %method, cell = %key, "no records for cell; excluded from mu/delta");
                    }
                    Cell {
                        key: key.clone(),
                        correct,
                        total,
                        accuracy: (total > 0).then(|| 100.0 * correct as f64 / total as f64),
                    }
                })
                .collect();
            let present: Vec<f64> = cells.iter().filter_map(|c| c.accuracy).collect();
            let (mu, delta) = match mu_delta(&present) {
                Some((m, d)) => (Some(m), Some(d)),
                None => (None, None),
            };
            ReportRow {
                task,
                method,
                cells,
                mu,
                delta,
            }
        })
        .collect()
}

fn fmt1(x: Option<f64>) -> String {
    x.map(|v| format!("{:.1}", round1(v))).unwrap_or_default()
}

/// CSV with one column per cell plus μ and δ, one decimal each.
pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    let columns: Vec<&str> = rows.first().map(|r| r.cells.iter().map(|c| c.key.as_str()).collect()).unwrap_or_default();
    let _ = writeln!(out, "task,method,{},mu,delta", columns.join(","));
    for row in rows {
        let cells: Vec<String> = row.cells.iter().map(|c| fmt1(c.accuracy)).collect();
        let _ = writeln!(out, "{},{},{},{},{}", row.task, row.method, cells.join(","), fmt1(row.mu), fmt1(row.delta));
    }
    out
}

/// Aligned plain-text table with an overall μ / δ column.
pub fn render_table(rows: &[ReportRow]) -> String {
    let columns: Vec<String> = rows.first().map(|r| r.cells.iter().map(|c| c.key.clone()).collect()).unwrap_or_default();
    let mut header = vec!["task".to_string(), "method".to_string(), "overall (mu / delta)".to_string()];
    header.extend(columns);
    let mut table = vec![header];
    for row in rows {
        let overall = match (row.mu, row.delta) {
            (Some(m), Some(d)) => format!("{:.1} / {:.1}", round1(m), round1(d)),
            _ => "-".into(),
        };
        let mut line = vec![row.task.to_string(), row.method.to_string(), overall];
        line.extend(row.cells.iter().map(|c| match c.accuracy {
            Some(a) => format!("{:.1}", round1(a)),
            None => "-".into(),
        }));
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|i| table.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &table {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
