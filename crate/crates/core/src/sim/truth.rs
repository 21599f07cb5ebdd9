use serde::{Deserialize, Serialize};

use super::{simulate_block, PatternBlock};
use crate::aig::Aig;
use crate::error::SimError;

/// Shared random-pattern count used when a circuit has too many PIs for
/// exhaustive tables.
pub const DEFAULT_FALLBACK_PATTERNS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Exact,
    Sampled,
}

/// Per-node output bits over a stimulus. For exact tables `len == 2^k` and
/// bit `p` is the value under the assignment where PI `i` equals bit `i` of `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    bits: Vec<u64>,
    len: usize,
    kind: TableKind,
}

impl TruthTable {
    pub fn new(bits: Vec<u64>, len: usize, kind: TableKind) -> Result<Self, SimError> {
        if bits.len() != len.div_ceil(64) {
            return Err(SimError::InvalidTable(format!("{} words cannot hold exactly {len} bits", bits.len())));
        }
        let rem = len % 64;
        if rem != 0 && bits.last().is_some_and(|w| w >> rem != 0) {
            return Err(SimError::InvalidTable("bits set beyond table length".into()));
        }
        Ok(TruthTable { bits, len, kind })
    }

    /// Parses a bit string, index 0 first.
    pub fn from_bit_str(s: &str, kind: TableKind) -> Result<Self, SimError> {
        let mut bits = vec![0u64; s.len().div_ceil(64)];
        for (p, c) in s.chars().enumerate() {
            match c {
                '1' => bits[p / 64] |= 1 << (p % 64),
                '0' => {}
                _ => return Err(SimError::InvalidTable(format!("bad bit {c:?}"))),
            }
        }
        TruthTable::new(bits, s.len(), kind)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    /// Number of enumerated PIs for exact tables.
    pub fn pi_count(&self) -> Option<usize> {
        (self.kind == TableKind::Exact).then(|| self.len.trailing_zeros() as usize)
    }

    pub fn get(&self, p: usize) -> bool {
        (self.bits[p / 64] >> (p % 64)) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|p| if self.get(p) { '1' } else { '0' }).collect()
    }

    /// Lowercase hex of the integer whose bit `p` is table bit `p`, most
    /// significant digit first, `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = (self.bits[d / 16] >> ((d % 16) * 4)) & 0xf;
                char::from_digit(nibble as u32, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(hex: &str, len: usize, kind: TableKind) -> Result<Self, SimError> {
        if hex.len() != len.div_ceil(4) {
            return Err(SimError::InvalidTable(format!("{} hex digits for {len} bits", hex.len())));
        }
        let mut bits = vec![0u64; len.div_ceil(64)];
        for (i, c) in hex.chars().rev().enumerate() {
            let nibble = c
                .to_digit(16)
                .filter(|_| !c.is_ascii_uppercase())
                .ok_or_else(|| SimError::InvalidTable(format!("bad hex digit {c:?}")))?;
            bits[i / 16] |= u64::from(nibble) << ((i % 16) * 4);
        }
        TruthTable::new(bits, len, kind)
    }
}

/// Normalized Hamming distance: differing bits over table length.
pub fn hamming_distance_normalized(a: &TruthTable, b: &TruthTable) -> Result<f64, SimError> {
    if a.len != b.len {
        return Err(SimError::LengthMismatch(a.len, b.len));
    }
    if a.len == 0 {
        return Ok(0.0);
    }
    let diff: u64 = a.bits.iter().zip(&b.bits).map(|(x, y)| u64::from((x ^ y).count_ones())).sum();
    Ok(diff as f64 / a.len as f64)
}

/// Truth tables for every node: exhaustive when the circuit has at most
/// `cap_pis` inputs, otherwise `fallback_patterns` random patterns shared by
/// all nodes.
pub fn truth_tables(aig: &Aig, cap_pis: usize, fallback_patterns: usize, seed: u64) -> Vec<TruthTable> {
    let k = aig.pis.len();
    let (stim, kind) = if k <= cap_pis {
        (PatternBlock::exhaustive(k), TableKind::Exact)
    } else {
        (PatternBlock::random(k, fallback_patterns, seed), TableKind::Sampled)
    };
    let out = simulate_block(aig, &stim).expect("stimulus built for this circuit");
    (0..aig.len())
        .map(|v| TruthTable { bits: out.row(v).to_vec(), len: out.width(), kind })
        .collect()
}
