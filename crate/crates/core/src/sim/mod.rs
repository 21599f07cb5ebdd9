//! Bit-parallel logic simulation and the ground-truth labels derived from it.

mod labels;
mod pairs;
mod prob;
mod truth;

pub use labels::{read_labels, write_labels, CircuitLabels, LabelReadError, LabelRecord};
pub use pairs::{sample_node_pairs, NodePairSample};
pub use prob::{signal_probability_exact, signal_probability_mc, DEFAULT_MC_PATTERNS, DEFAULT_PI_CAP};
pub use truth::{hamming_distance_normalized, truth_tables, TableKind, TruthTable, DEFAULT_FALLBACK_PATTERNS};

use crate::aig::{Aig, NodeKind};
use crate::error::SimError;

/// Packed simulation values: one row of `words_per_row` 64-bit words per
/// signal, bit `p` of a row being that signal's value under pattern `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternBlock {
    width: usize,
    words_per_row: usize,
    words: Vec<u64>,
    exhaustive: bool,
}

impl PatternBlock {
    pub fn zeros(rows: usize, width: usize) -> Self {
        let words_per_row = width.div_ceil(64);
        PatternBlock { width, words_per_row, words: vec![0; rows * words_per_row], exhaustive: false }
    }

    /// Builds a block from explicit rows; padding bits beyond `width` are cleared.
    pub fn from_rows(rows: &[Vec<u64>], width: usize) -> Result<Self, SimError> {
        let mut block = PatternBlock::zeros(rows.len(), width);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != block.words_per_row {
                return Err(SimError::WidthMismatch { expected: block.words_per_row * 64, found: row.len() * 64 });
            }
            block.row_mut(r).copy_from_slice(row);
            block.mask_row(r);
        }
        Ok(block)
    }

    /// Parses rows written as bit strings, leftmost character = pattern 0.
    pub fn from_bit_strings(rows: &[&str]) -> Result<Self, SimError> {
        let width = rows.first().map_or(0, |r| r.len());
        let mut block = PatternBlock::zeros(rows.len(), width);
        for (r, s) in rows.iter().enumerate() {
            if s.len() != width {
                return Err(SimError::WidthMismatch { expected: width, found: s.len() });
            }
            for (p, c) in s.chars().enumerate() {
                if c == '1' {
                    block.set(r, p, true);
                }
            }
        }
        Ok(block)
    }

    /// Counter-based pseudo-random stimulus: the word for (pi, word) depends
    /// only on `(seed, pi, word)`.
    pub fn random(rows: usize, width: usize, seed: u64) -> Self {
        let mut block = PatternBlock::zeros(rows, width);
        for r in 0..rows {
            for w in 0..block.words_per_row {
                block.words[r * block.words_per_row + w] = counter_word(seed, r as u64, w as u64);
            }
            block.mask_row(r);
        }
        block
    }

    /// All `2^k` assignments: PI `i` takes bit `i` of the pattern index.
    pub fn exhaustive(k: usize) -> Self {
        let width = 1usize << k;
        let mut block = PatternBlock::zeros(k, width);
        for i in 0..k {
            let row = block.row_mut(i);
            if i < 6 {
                let mut word = 0u64;
                for b in 0..64 {
                    if (b >> i) & 1 == 1 {
                        word |= 1 << b;
                    }
                }
                row.iter_mut().for_each(|w| *w = word);
            } else {
                let period = 1usize << (i - 6);
                for (w, word) in row.iter_mut().enumerate() {
                    *word = if (w / period) & 1 == 1 { !0 } else { 0 };
                }
            }
            block.mask_row(i);
        }
        block.exhaustive = true;
        block
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        if self.words_per_row == 0 {
            0
        } else {
            self.words.len() / self.words_per_row
        }
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    pub fn get(&self, r: usize, p: usize) -> bool {
        (self.row(r)[p / 64] >> (p % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, p: usize, v: bool) {
        let wpr = self.words_per_row;
        let word = &mut self.words[r * wpr + p / 64];
        if v {
            *word |= 1 << (p % 64);
        } else {
            *word &= !(1 << (p % 64));
        }
    }

    pub fn popcount(&self, r: usize) -> u64 {
        self.row(r).iter().map(|w| u64::from(w.count_ones())).sum()
    }

    fn tail_mask(&self) -> u64 {
        match self.width % 64 {
            0 => !0,
            rem => (1u64 << rem) - 1,
        }
    }

    fn mask_row(&mut self, r: usize) {
        if self.words_per_row > 0 {
            let mask = self.tail_mask();
            let last = (r + 1) * self.words_per_row - 1;
            self.words[last] &= mask;
        }
    }

    pub fn row_string(&self, r: usize) -> String {
        (0..self.width).map(|p| if self.get(r, p) { '1' } else { '0' }).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x632b_e59b_d9b4_e019)))
}

fn counter_word(seed: u64, row: u64, word: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ row) ^ word.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Evaluates every node in topological order. `stimulus` holds one row per
/// PI in `aig.pis` order; the constant node, if any, is all zeros.
pub fn simulate_block(aig: &Aig, stimulus: &PatternBlock) -> Result<PatternBlock, SimError> {
    if stimulus.rows() != aig.pis.len() && !(aig.pis.is_empty() && stimulus.words.is_empty()) {
        return Err(SimError::StimulusCount { expected: aig.pis.len(), found: stimulus.rows() });
    }
    let width = stimulus.width;
    let wpr = stimulus.words_per_row;
    let mut out = PatternBlock::zeros(aig.len(), width);
    out.exhaustive = stimulus.exhaustive;
    for (i, &p) in aig.pis.iter().enumerate() {
        out.row_mut(p).copy_from_slice(stimulus.row(i));
    }
    let mask = out.tail_mask();
    for (v, node) in aig.nodes.iter().enumerate() {
        match node.kind {
            NodeKind::Pi => {}
            NodeKind::And => {
                let (a, b) = (node.fanins[0], node.fanins[1]);
                for w in 0..wpr {
                    out.words[v * wpr + w] = out.words[a * wpr + w] & out.words[b * wpr + w];
                }
            }
            NodeKind::Not => {
                let a = node.fanins[0];
                for w in 0..wpr {
                    out.words[v * wpr + w] = !out.words[a * wpr + w];
                }
                if wpr > 0 {
                    out.words[v * wpr + wpr - 1] &= mask;
                }
            }
        }
    }
    Ok(out)
}

/// One-pattern-at-a-time reference interpreter.
pub fn simulate_naive(aig: &Aig, assignment: &[bool]) -> Result<Vec<bool>, SimError> {
    if assignment.len() != aig.pis.len() {
        return Err(SimError::StimulusCount { expected: aig.pis.len(), found: assignment.len() });
    }
    let mut value = vec![false; aig.len()];
    for (i, &p) in aig.pis.iter().enumerate() {
        value[p] = assignment[i];
    }
    for (v, node) in aig.nodes.iter().enumerate() {
        value[v] = match node.kind {
            NodeKind::Pi => value[v],
            NodeKind::And => value[node.fanins[0]] && value[node.fanins[1]],
            NodeKind::Not => !value[node.fanins[0]],
        };
    }
    Ok(value)
}
