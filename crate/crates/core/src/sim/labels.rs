//! Newline-delimited JSON label files, one record per node.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{signal_probability_mc, truth_tables, TableKind, TruthTable};
use crate::aig::{Aig, NodeKind};
use crate::error::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub circuit_name: String,
    pub node_id: usize,
    pub kind: NodeKind,
    pub signal_prob: f64,
    pub truth_table: String,
    pub table_kind: TableKind,
    /// Table length in bits; the hex digits alone are ambiguous for short tables.
    pub table_len: usize,
}

/// Ground truth for one circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitLabels {
    pub name: String,
    pub kinds: Vec<NodeKind>,
    pub signal_prob: Vec<f64>,
    pub tables: Vec<TruthTable>,
}

impl CircuitLabels {
    pub fn compute(aig: &Aig, patterns: usize, truth_pis: usize, fallback_patterns: usize, seed: u64) -> Self {
        CircuitLabels {
            name: aig.name.clone(),
            kinds: aig.nodes.iter().map(|n| n.kind).collect(),
            signal_prob: signal_probability_mc(aig, patterns, seed),
            tables: truth_tables(aig, truth_pis, fallback_patterns, seed),
        }
    }

    pub fn len(&self) -> usize {
        self.signal_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal_prob.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = LabelRecord> + '_ {
        (0..self.len()).map(move |v| LabelRecord {
            circuit_name: self.name.clone(),
            node_id: v,
            kind: self.kinds[v],
            signal_prob: self.signal_prob[v],
            truth_table: self.tables[v].to_hex(),
            table_kind: self.tables[v].kind(),
            table_len: self.tables[v].len(),
        })
    }
}

pub fn write_labels<'a, W: Write>(mut out: W, labels: impl IntoIterator<Item = &'a CircuitLabels>) -> std::io::Result<()> {
    for c in labels {
        for rec in c.records() {
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum LabelReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Table { line: usize, source: SimError },
    #[error("line {line}: node {node_id} of {circuit} out of order")]
    Order { line: usize, circuit: String, node_id: usize },
}

/// Reads records back into per-circuit labels, in file order. Records of a
/// circuit must be contiguous with node ids 0, 1, 2, ...
pub fn read_labels<R: BufRead>(input: R) -> Result<Vec<CircuitLabels>, LabelReadError> {
    let mut out: Vec<CircuitLabels> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabelRecord = serde_json::from_str(&line).map_err(|source| LabelReadError::Json { line: i + 1, source })?;
        let table = TruthTable::from_hex(&rec.truth_table, rec.table_len, rec.table_kind)
            .map_err(|source| LabelReadError::Table { line: i + 1, source })?;
        if out.last().map_or(true, |c| c.name != rec.circuit_name) {
            out.push(CircuitLabels { name: rec.circuit_name.clone(), kinds: vec![], signal_prob: vec![], tables: vec![] });
        }
        let c = out.last_mut().unwrap();
        if rec.node_id != c.len() {
            return Err(LabelReadError::Order { line: i + 1, circuit: rec.circuit_name, node_id: rec.node_id });
        }
        c.kinds.push(rec.kind);
        c.signal_prob.push(rec.signal_prob);
        c.tables.push(table);
    }
    Ok(out)
}
