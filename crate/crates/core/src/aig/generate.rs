use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Aig, NodeId, NodeKind};
use crate::error::AigError;

/// Parameters of the synthetic circuit generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomAigParams {
    pub pis: usize,
    pub ands: usize,
    pub seed: u64,
    /// Probability of inverting each chosen AND fanin.
    pub not_prob: f64,
}

impl RandomAigParams {
    pub fn new(pis: usize, ands: usize, seed: u64, not_prob: f64) -> Self {
        RandomAigParams { pis, ands, seed, not_prob }
    }
}

/// Builds a random combinational AIG.
///
/// Each AND picks two distinct earlier signals (PIs or ANDs) uniformly and
/// wraps each in an inverter with probability `not_prob`. Inverters are
/// shared, so a signal is inverted by at most one NOT node. Every AND without
/// fanout becomes a primary output; a circuit without ANDs exposes its PIs.
pub fn generate_random_aig(params: &RandomAigParams) -> Result<Aig, AigError> {
    if params.pis == 0 {
        return Err(AigError::Invalid("generator needs at least one PI".into()));
    }
    if !(0.0..=1.0).contains(&params.not_prob) {
        return Err(AigError::Invalid(format!("not_prob {} outside [0, 1]", params.not_prob)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut aig = Aig::new(format!("rand_{}_{}_{}", params.pis, params.ands, params.seed));
    let mut signals: Vec<NodeId> = (0..params.pis).map(|_| aig.add_pi()).collect();
    let mut inverter: Vec<Option<NodeId>> = vec![None; params.pis + 3 * params.ands];

    for _ in 0..params.ands {
        let (i, j) = if signals.len() == 1 {
            (0, 0)
        } else {
            let i = rng.gen_range(0..signals.len());
            let mut j = rng.gen_range(0..signals.len() - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        };
        let mut fanin = [signals[i], signals[j]];
        for f in &mut fanin {
            if rng.gen_bool(params.not_prob) {
                let src = *f;
                *f = match inverter[src] {
                    Some(n) => n,
                    None => {
                        let n = aig.add_not(src);
                        inverter[src] = Some(n);
                        n
                    }
                };
            }
        }
        let g = aig.add_and(fanin[0], fanin[1]);
        signals.push(g);
    }

    let fanout = aig.fanout_counts();
    aig.pos = (0..aig.len()).filter(|&v| aig.kind(v) == NodeKind::And && fanout[v] == 0).collect();
    if aig.pos.is_empty() {
        aig.pos = aig.pis.clone();
    }
    Ok(aig)
}

/// `count` random circuits named `desk_0000`, ... whose total node counts
/// (PIs, ANDs and NOTs) are drawn uniformly from `nodes`.
pub fn generate_corpus(count: usize, nodes: RangeInclusive<usize>, seed: u64) -> Result<Vec<Aig>, AigError> {
    let (lo, hi) = (*nodes.start(), *nodes.end());
    if lo < 8 || lo > hi {
        return Err(AigError::Invalid(format!("node range {lo}..={hi} too small")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let target = rng.gen_range(lo..=hi);
        let pis = rng.gen_range(4..=14usize).min(target / 4);
        // with not_prob 0.5 roughly 0.6 inverters appear per AND
        let mut ands = ((target - pis) as f64 / 1.6).round().max(1.0) as usize;
        let mut attempt = 0u64;
        let aig = loop {
            let g = generate_random_aig(&RandomAigParams::new(pis, ands, rng.gen(), 0.5))?;
            if nodes.contains(&g.len()) || attempt == 64 {
                break g;
            }
            let per_and = (g.len() - pis) as f64 / ands as f64;
            ands = (((target - pis) as f64 / per_and).round() as usize).max(1);
            attempt += 1;
        };
        if !nodes.contains(&aig.len()) {
            return Err(AigError::Invalid(format!("could not hit {lo}..={hi} nodes for circuit {k}")));
        }
        out.push(Aig { name: format!("desk_{k:04}"), ..aig });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::validate_and_levelize;

    #[test]
    fn single_pi_without_gates() {
        for seed in 0..5 {
            let g = generate_random_aig(&RandomAigParams::new(1, 0, seed, 0.5)).unwrap();
            assert_eq!(g.len(), 1);
            assert_eq!(g.pis, vec![0]);
        }
    }

    #[test]
    fn corpus_sizes_within_range() {
        let c = generate_corpus(40, 50..=300, 9).unwrap();
        assert!(c.iter().all(|g| (50..=300).contains(&g.len())));
        assert_eq!(c[3].name, "desk_0003");
        assert_eq!(c, generate_corpus(40, 50..=300, 9).unwrap());
        let spread = c.iter().map(|g| g.len()).max().unwrap() - c.iter().map(|g| g.len()).min().unwrap();
        assert!(spread > 150, "sizes barely vary: {spread}");
    }

    #[test]
    fn deterministic_per_seed() {
        let p = RandomAigParams::new(6, 40, 11, 0.3);
        assert_eq!(generate_random_aig(&p).unwrap(), generate_random_aig(&p).unwrap());
        let q = RandomAigParams { seed: 12, ..p.clone() };
        assert_ne!(generate_random_aig(&p).unwrap().nodes, generate_random_aig(&q).unwrap().nodes);
    }

    #[test]
    fn node_count_bounds() {
        let g = generate_random_aig(&RandomAigParams::new(8, 100, 7, 0.5)).unwrap();
        let nots = g.count(NodeKind::Not);
        assert_eq!(g.len(), 8 + 100 + nots);
        assert!((109..=309).contains(&g.len()), "{}", g.len());
        assert_eq!(validate_and_levelize(&g).unwrap(), g);
    }

    #[test]
    fn fanins_are_distinct_signals_and_inverters_shared() {
        let g = generate_random_aig(&RandomAigParams::new(4, 200, 3, 0.5)).unwrap();
        let mut inverted = std::collections::HashSet::new();
        for node in &g.nodes {
            match node.kind {
                NodeKind::Not => assert!(inverted.insert(node.fanins[0]), "duplicate inverter"),
                NodeKind::And => {
                    let base = |f: NodeId| if g.kind(f) == NodeKind::Not { g.nodes[f].fanins[0] } else { f };
                    assert_ne!(base(node.fanins[0]), base(node.fanins[1]));
                }
                NodeKind::Pi => {}
            }
        }
    }
}
