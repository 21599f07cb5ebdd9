use super::{recompute_levels, Aig, AigNode, NodeId, NodeKind};
use crate::error::AigError;

/// Checks arity and fanin ids, establishes a topological order and computes
/// levels. Nodes already in topological order keep their ids; otherwise the
/// graph is relabeled with a stable Kahn ordering.
pub fn validate_and_levelize(aig: &Aig) -> Result<Aig, AigError> {
    let n = aig.nodes.len();
    for (id, node) in aig.nodes.iter().enumerate() {
        let expected = node.kind.arity();
        if node.fanins.len() != expected {
            return Err(AigError::Arity { node: id, kind: node.kind.as_str(), found: node.fanins.len(), expected });
        }
        if let Some(&bad) = node.fanins.iter().find(|&&f| f >= n) {
            return Err(AigError::DanglingFanin { node: id, fanin: bad });
        }
    }
    for &p in aig.pis.iter().chain(aig.constant.iter()) {
        if p >= n || aig.nodes[p].kind != NodeKind::Pi {
            return Err(AigError::Invalid(format!("input reference {p} is not a PI node")));
        }
    }
    if let Some(&o) = aig.pos.iter().find(|&&o| o >= n) {
        return Err(AigError::Invalid(format!("output reference {o} does not exist")));
    }

    let ordered = aig.nodes.iter().enumerate().all(|(id, node)| node.fanins.iter().all(|&f| f < id));
    if ordered {
        let mut out = aig.clone();
        recompute_levels(&mut out.nodes);
        return Ok(out);
    }

    // Kahn's algorithm, always taking the smallest ready id.
    let mut indeg: Vec<usize> = aig.nodes.iter().map(|node| node.fanins.len()).collect();
    let mut users: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (u, v) in aig.edges() {
        users[u].push(v);
    }
    let mut ready: std::collections::BTreeSet<NodeId> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in &users[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
        return Err(AigError::CycleDetected(stuck));
    }
    let mut perm = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    let mut nodes: Vec<AigNode> = order
        .iter()
        .map(|&old| {
            let mut node = aig.nodes[old].clone();
            node.fanins.iter_mut().for_each(|f| *f = perm[*f]);
            node
        })
        .collect();
    recompute_levels(&mut nodes);
    Ok(Aig {
        name: aig.name.clone(),
        nodes,
        pis: aig.pis.iter().map(|&p| perm[p]).collect(),
        pos: aig.pos.iter().map(|&p| perm[p]).collect(),
        constant: aig.constant.map(|c| perm[c]),
    })
}
