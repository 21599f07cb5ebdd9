use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EpochRecord, Sample, Task};
use crate::error::TrainError;
use crate::model::{GraphIndex, Model};
use crate::numerics::{cosine_distance, Tensor, RANGE_EPS};
use crate::sim::{derive_seed, hamming_distance_normalized, sample_node_pairs, TruthTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub mae: f64,
    pub mse: f64,
}

impl TaskMetrics {
    pub(crate) fn from_residuals(residuals: impl Iterator<Item = f64>) -> Self {
        let (mut abs, mut sq, mut n) = (0.0, 0.0, 0usize);
        for r in residuals {
            abs += r.abs();
            sq += r * r;
            n += 1;
        }
        if n == 0 {
            return TaskMetrics { mae: 0.0, mse: 0.0 };
        }
        TaskMetrics { mae: abs / n as f64, mse: sq / n as f64 }
    }
}

/// Mean absolute and mean squared error over all nodes.
pub fn spp_metrics(pred: &[f64], truth: &[f64]) -> TaskMetrics {
    debug_assert_eq!(pred.len(), truth.len());
    TaskMetrics::from_residuals(pred.iter().zip(truth).map(|(p, t)| p - t))
}

/// Pooled errors between already-normalized distance families.
pub fn ttdp_metrics(dt_norm: &[f64], dz_norm: &[f64]) -> TaskMetrics {
    debug_assert_eq!(dt_norm.len(), dz_norm.len());
    TaskMetrics::from_residuals(dt_norm.iter().zip(dz_norm).map(|(a, b)| a - b))
}

/// Min-max rescale to [0, 1]; a (near-)constant sequence maps to zeros.
pub fn normalize_distances(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || hi - lo < RANGE_EPS {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// `D^T' - D^Z'` for each pair of one circuit, each family min-max
/// normalized over that circuit's pairs.
pub fn ttdp_residuals(tables: &[TruthTable], z: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>, TrainError> {
    let mut dt = Vec::with_capacity(pairs.len());
    let mut dz = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        dt.push(hamming_distance_normalized(&tables[i], &tables[j])?);
        dz.push(cosine_distance(z.row(i), z.row(j)).0);
    }
    let (dt, dz) = (normalize_distances(&dt), normalize_distances(&dz));
    Ok(dt.iter().zip(&dz).map(|(a, b)| a - b).collect())
}

fn graph(model: &Model, s: &Sample) -> GraphIndex {
    GraphIndex::new(&s.aig, model.config().reverse_edges)
}

pub fn evaluate_spp(model: &Model, samples: &[&Sample]) -> Result<TaskMetrics, TrainError> {
    let per: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| {
            if s.labels.len() != s.aig.len() {
                return Err(TrainError::LabelMismatch { circuit: s.aig.name.clone(), expected: s.aig.len(), found: s.labels.len() });
            }
            let (_, y) = model.predict(&graph(model, s))?;
            Ok(y.iter().zip(&s.labels.signal_prob).map(|(p, t)| p - t).collect())
        })
        .collect::<Result<_, TrainError>>()?;
    Ok(TaskMetrics::from_residuals(per.into_iter().flatten()))
}

/// Per circuit: sample pairs with `derive_seed(seed, k)`, normalize both
/// distance families within the circuit, then pool `|D^T' - D^Z'|`.
pub fn evaluate_ttdp(model: &Model, samples: &[&Sample], pair_count: usize, seed: u64) -> Result<TaskMetrics, TrainError> {
    let per: Vec<Vec<f64>> = samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            if s.aig.len() < 2 {
                log::warn!("skipping {}: fewer than 2 nodes", s.aig.name);
                return Ok(Vec::new());
            }
            if s.labels.len() != s.aig.len() {
                return Err(TrainError::LabelMismatch { circuit: s.aig.name.clone(), expected: s.aig.len(), found: s.labels.len() });
            }
            let z = model.embed(&graph(model, s))?;
            let pairs = sample_node_pairs(s.aig.len(), pair_count, derive_seed(seed, k as u64)).pairs;
            ttdp_residuals(&s.labels.tables, &z, &pairs)
        })
        .collect::<Result<_, TrainError>>()?;
    Ok(TaskMetrics::from_residuals(per.into_iter().flatten()))
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub run: String,
    pub config_hash: String,
    pub task: Task,
    pub spp: Option<TaskMetrics>,
    pub ttdp: Option<TaskMetrics>,
    pub t_avg: Option<f64>,
    pub epochs: usize,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// One line of a metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub run: String,
    pub config_hash: String,
    pub metric: String,
    pub value: f64,
}

impl MetricsReport {
    pub fn records(&self) -> Vec<MetricRecord> {
        let mut out = Vec::new();
        let mut push = |metric: &str, value: f64| {
            out.push(MetricRecord { run: self.run.clone(), config_hash: self.config_hash.clone(), metric: metric.into(), value })
        };
        if let Some(m) = self.spp {
            push("spp_mae", m.mae);
            push("spp_mse", m.mse);
        }
        if let Some(m) = self.ttdp {
            push("ttdp_mae", m.mae);
            push("ttdp_mse", m.mse);
        }
        if let Some(t) = self.t_avg {
            push("t_avg", t);
        }
        push("epochs", self.epochs as f64);
        push("best_epoch", self.best_epoch as f64);
        out
    }

    /// Newline-delimited JSON, one record per metric.
    pub fn to_jsonl(&self) -> String {
        self.records().iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }
}

pub fn read_metrics<R: BufRead>(input: R) -> Result<Vec<MetricRecord>, String> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub run: String,
    pub mae: f64,
    pub mse: f64,
    pub t_avg: Option<f64>,
}

impl TableRow {
    /// Collects one row per run from metric records for `task`
    /// (`spp` or `ttdp`). Runs lacking that task's MAE are skipped.
    pub fn from_records(records: &[MetricRecord], task: &str) -> Vec<TableRow> {
        let mut rows: Vec<TableRow> = Vec::new();
        for r in records {
            let idx = match rows.iter().position(|row| row.run == r.run) {
                Some(i) => i,
                None => {
                    rows.push(TableRow { run: r.run.clone(), mae: f64::NAN, mse: f64::NAN, t_avg: None });
                    rows.len() - 1
                }
            };
            let row = &mut rows[idx];
            match r.metric.strip_prefix(task).and_then(|m| m.strip_prefix('_')) {
                Some("mae") => row.mae = r.value,
                Some("mse") => row.mse = r.value,
                _ if r.metric == "t_avg" => row.t_avg = Some(r.value),
                _ => {}
            }
        }
        rows.retain(|r| !r.mae.is_nan());
        rows
    }
}

/// Aligned `run | MAE | MSE | T_avg` table, sorted by MAE ascending.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.mae.total_cmp(&b.mae).then_with(|| a.run.cmp(&b.run)));
    let width = rows.iter().map(|r| r.run.len()).chain(std::iter::once(3)).max().unwrap_or(3);
    let mut out = format!("{:<width$}  {:>8}  {:>8}  {:>8}\n", "run", "MAE", "MSE", "T_avg");
    for r in &rows {
        let t = r.t_avg.map_or_else(|| "-".to_string(), |t| format!("{t:.2}"));
        out.push_str(&format!("{:<width$}  {:>8.4}  {:>8.4}  {:>8}\n", r.run, r.mae, r.mse, t));
    }
    out
}
