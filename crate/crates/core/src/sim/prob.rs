use super::{simulate_block, PatternBlock};
use crate::aig::Aig;
use crate::error::SimError;

/// Default Monte-Carlo pattern count for signal-probability labels (2^15).
pub const DEFAULT_MC_PATTERNS: usize = 1 << 15;
/// Default PI count up to which exhaustive enumeration is used.
pub const DEFAULT_PI_CAP: usize = 12;

/// Fraction of `patterns` random stimuli under which each node is 1.
pub fn signal_probability_mc(aig: &Aig, patterns: usize, seed: u64) -> Vec<f64> {
    let patterns = patterns.max(1);
    let stim = PatternBlock::random(aig.pis.len(), patterns, seed);
    let out = simulate_block(aig, &stim).expect("stimulus built for this circuit");
    (0..aig.len()).map(|v| out.popcount(v) as f64 / patterns as f64).collect()
}

/// Exact signal probability under uniform independent PIs.
pub fn signal_probability_exact(aig: &Aig, cap: usize) -> Result<Vec<f64>, SimError> {
    let k = aig.pis.len();
    if k > cap {
        return Err(SimError::CapExceeded { pis: k, cap });
    }
    let out = simulate_block(aig, &PatternBlock::exhaustive(k))?;
    let total = (1u64 << k) as f64;
    Ok((0..aig.len()).map(|v| out.popcount(v) as f64 / total).collect())
}
