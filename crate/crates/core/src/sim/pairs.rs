use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aig::NodeId;

/// Distinct unordered node pairs, each stored with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePairSample {
    pub pairs: Vec<(NodeId, NodeId)>,
    pub seed: u64,
}

/// Maps a linear index over the upper triangle of an `n x n` matrix to `(i, j)`, `i < j`.
fn unrank_pair(mut r: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if r < row {
            return (i, i + 1 + r);
        }
        r -= row;
        i += 1;
    }
}

/// Draws `min(count, n(n-1)/2)` distinct pairs uniformly without replacement
/// from the nodes `0..node_count`.
pub fn sample_node_pairs(node_count: usize, count: usize, seed: u64) -> NodePairSample {
    if node_count < 2 {
        return NodePairSample { pairs: Vec::new(), seed };
    }
    let total = node_count * (node_count - 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amount = count.min(total);
    let mut ranks = index::sample(&mut rng, total, amount).into_vec();
    if amount == total {
        ranks.sort_unstable();
    }
    // Row-by-row unranking; sorting first keeps it a single sweep.
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_unstable_by_key(|&k| ranks[k]);
    let mut pairs = vec![(0, 0); ranks.len()];
    let (mut i, mut row_start) = (0usize, 0usize);
    for k in order {
        let r = ranks[k];
        while r >= row_start + (node_count - 1 - i) {
            row_start += node_count - 1 - i;
            i += 1;
        }
        pairs[k] = (i, i + 1 + (r - row_start));
    }
    debug_assert!(ranks.iter().zip(&pairs).all(|(&r, &p)| unrank_pair(r, node_count) == p));
    NodePairSample { pairs, seed }
}
