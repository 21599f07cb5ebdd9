use super::{Aig, AigNode, NodeId};
use crate::error::AigError;

/// Disjoint union of several circuits with the id offset of each member.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchUnion {
    pub aig: Aig,
    /// `offsets[k]` is the first node id of circuit `k`; a final entry holds
    /// the total node count.
    pub offsets: Vec<usize>,
    pub pi_offsets: Vec<usize>,
    pub po_offsets: Vec<usize>,
    pub names: Vec<String>,
}

impl BatchUnion {
    pub fn circuit_count(&self) -> usize {
        self.names.len()
    }

    pub fn range(&self, k: usize) -> std::ops::Range<NodeId> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Circuit index of every node.
    pub fn membership(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.aig.len());
        for k in 0..self.circuit_count() {
            out.extend(std::iter::repeat(k).take(self.range(k).len()));
        }
        out
    }
}

/// Concatenates circuits into one graph with no cross-circuit edges.
/// A union may carry several constant nodes; only the first is recorded in
/// `aig.constant`, the rest stay as unlisted PI-kind nodes.
pub fn batch_union<'a>(aigs: impl IntoIterator<Item = &'a Aig>) -> BatchUnion {
    let mut nodes = Vec::new();
    let (mut pis, mut pos) = (Vec::new(), Vec::new());
    let mut offsets = vec![0];
    let (mut pi_offsets, mut po_offsets) = (vec![0], vec![0]);
    let mut names = Vec::new();
    let mut constant = None;
    for aig in aigs {
        let base = nodes.len();
        nodes.extend(aig.nodes.iter().map(|n| AigNode {
            kind: n.kind,
            fanins: n.fanins.iter().map(|&f| f + base).collect(),
            level: n.level,
        }));
        pis.extend(aig.pis.iter().map(|&p| p + base));
        pos.extend(aig.pos.iter().map(|&p| p + base));
        if constant.is_none() {
            constant = aig.constant.map(|c| c + base);
        }
        offsets.push(nodes.len());
        pi_offsets.push(pis.len());
        po_offsets.push(pos.len());
        names.push(aig.name.clone());
    }
    let name = if names.len() == 1 { names[0].clone() } else { format!("batch[{}]", names.len()) };
    BatchUnion { aig: Aig { name, nodes, pis, pos, constant }, offsets, pi_offsets, po_offsets, names }
}

/// Recovers circuit `k` from a union.
pub fn extract_circuit(batch: &BatchUnion, k: usize) -> Result<Aig, AigError> {
    if k >= batch.circuit_count() {
        return Err(AigError::Invalid(format!("circuit {k} not in batch of {}", batch.circuit_count())));
    }
    let range = batch.range(k);
    let base = range.start;
    let nodes = batch.aig.nodes[range.clone()]
        .iter()
        .map(|n| AigNode { kind: n.kind, fanins: n.fanins.iter().map(|&f| f - base).collect(), level: n.level })
        .collect();
    let pis = batch.aig.pis[batch.pi_offsets[k]..batch.pi_offsets[k + 1]].iter().map(|&p| p - base).collect();
    let pos = batch.aig.pos[batch.po_offsets[k]..batch.po_offsets[k + 1]].iter().map(|&p| p - base).collect();
    // The constant of circuit k is its only PI-kind node outside `pis`.
    let listed: std::collections::HashSet<NodeId> = batch.aig.pis[batch.pi_offsets[k]..batch.pi_offsets[k + 1]].iter().copied().collect();
    let constant = range
        .clone()
        .find(|&v| batch.aig.nodes[v].kind == super::NodeKind::Pi && !listed.contains(&v))
        .map(|c| c - base);
    Ok(Aig { name: batch.names[k].clone(), nodes, pis, pos, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{generate_random_aig, RandomAigParams};

    fn five_nodes(seed: u64) -> Aig {
        let mut g = Aig::new(format!("c{seed}"));
        let a = g.add_pi();
        let b = g.add_pi();
        let n = g.add_not(a);
        let x = g.add_and(n, b);
        let y = g.add_and(x, a);
        g.pos.push(y);
        g
    }

    #[test]
    fn single_circuit_is_identity() {
        let g = generate_random_aig(&RandomAigParams::new(4, 20, 1, 0.3)).unwrap();
        let u = batch_union([&g]);
        assert_eq!(u.aig, g);
        assert_eq!(u.offsets, vec![0, g.len()]);
    }

    #[test]
    fn two_circuits_offsets() {
        let (a, b) = (five_nodes(1), five_nodes(2));
        let u = batch_union([&a, &b]);
        assert_eq!(u.aig.len(), 10);
        assert_eq!(&u.offsets[..2], &[0, 5]);
        assert!(u.aig.edges().all(|(s, t)| (s < 5) == (t < 5)));
        assert_eq!(u.membership(), vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn extraction_recovers_inputs() {
        let parts: Vec<Aig> = (0..4).map(|s| generate_random_aig(&RandomAigParams::new(3 + s as usize, 15, s, 0.4)).unwrap()).collect();
        let u = batch_union(&parts);
        for (k, p) in parts.iter().enumerate() {
            assert_eq!(&extract_circuit(&u, k).unwrap(), p);
        }
    }
}
