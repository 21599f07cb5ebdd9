//! And-Inverter Graph data model.
//!
//! An [`Aig`] stores primary inputs, two-input AND gates and explicit
//! inverters as nodes with dense ids in topological order. Primary outputs
//! are references into the node set, not nodes of their own.
//!
//! AIGER files keep inversion on edges; [`aiger`] parses them into a
//! literal-level [`aiger::LiteralAig`] which [`expand_inverters`] turns into
//! the node-typed form used everywhere else.

pub mod aiger;
mod batch;
mod expand;
mod generate;
mod levelize;

pub use batch::{batch_union, extract_circuit, BatchUnion};
pub use expand::expand_inverters;
pub use generate::{generate_corpus, generate_random_aig, RandomAigParams};
pub use levelize::validate_and_levelize;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

use crate::error::AigError;

/// Dense node index into [`Aig::nodes`].
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Pi,
    And,
    Not,
}

impl NodeKind {
    /// Number of fanins a node of this kind must have.
    pub fn arity(self) -> usize {
        match self {
            NodeKind::Pi => 0,
            NodeKind::Not => 1,
            NodeKind::And => 2,
        }
    }

    /// Position of the kind in a one-hot feature vector.
    pub fn index(self) -> usize {
        match self {
            NodeKind::Pi => 0,
            NodeKind::And => 1,
            NodeKind::Not => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Pi => "pi",
            NodeKind::And => "and",
            NodeKind::Not => "not",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Typed edge relation. The relation of an edge `u -> v` depends only on the
/// kind of the consumer `v`; the self-loop is handled separately by every
/// layer, so it has no variant here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationId {
    IntoAnd,
    IntoNot,
}

impl RelationId {
    pub const ALL: [RelationId; 2] = [RelationId::IntoAnd, RelationId::IntoNot];

    pub fn for_consumer(kind: NodeKind) -> Option<RelationId> {
        match kind {
            NodeKind::And => Some(RelationId::IntoAnd),
            NodeKind::Not => Some(RelationId::IntoNot),
            NodeKind::Pi => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            RelationId::IntoAnd => 0,
            RelationId::IntoNot => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AigNode {
    pub kind: NodeKind,
    pub fanins: Vec<NodeId>,
    /// Longest path from any PI; filled in by [`validate_and_levelize`].
    pub level: u32,
}

impl AigNode {
    pub fn pi() -> Self {
        AigNode { kind: NodeKind::Pi, fanins: Vec::new(), level: 0 }
    }

    pub fn and(a: NodeId, b: NodeId) -> Self {
        AigNode { kind: NodeKind::And, fanins: vec![a, b], level: 0 }
    }

    pub fn not(a: NodeId) -> Self {
        AigNode { kind: NodeKind::Not, fanins: vec![a], level: 0 }
    }
}

/// A combinational And-Inverter Graph with explicit inverter nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aig {
    pub name: String,
    pub nodes: Vec<AigNode>,
    /// Primary inputs in declaration order. Never contains `constant`.
    pub pis: Vec<NodeId>,
    /// Primary output references.
    pub pos: Vec<NodeId>,
    /// Constant-false source, when the circuit references AIGER literal 0/1.
    /// It is a PI-kind node that is not listed in `pis`.
    pub constant: Option<NodeId>,
}

impl Aig {
    pub fn new(name: impl Into<String>) -> Self {
        Aig { name: name.into(), nodes: Vec::new(), pis: Vec::new(), pos: Vec::new(), constant: None }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn add_pi(&mut self) -> NodeId {
        let id = self.push(AigNode::pi());
        self.pis.push(id);
        id
    }

    pub fn add_and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(AigNode::and(a, b))
    }

    pub fn add_not(&mut self, a: NodeId) -> NodeId {
        self.push(AigNode::not(a))
    }

    fn push(&mut self, mut node: AigNode) -> NodeId {
        node.level = node.fanins.iter().map(|&f| self.nodes.get(f).map_or(0, |n| n.level + 1)).max().unwrap_or(0);
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn max_level(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// All fanin edges `(source, target)` in target order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.iter().enumerate().flat_map(|(v, n)| n.fanins.iter().map(move |&u| (u, v)))
    }

    pub fn fanout_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.nodes.len()];
        for (u, _) in self.edges() {
            counts[u] += 1;
        }
        counts
    }

    /// One-hot node-kind features, row-major `len() x 3`.
    pub fn kind_features(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len() * 3];
        for (i, n) in self.nodes.iter().enumerate() {
            out[i * 3 + n.kind.index()] = 1.0;
        }
        out
    }

    /// Relabels nodes so that new id `perm[old]` holds old node `old`.
    /// The permutation must keep fanins before their users.
    pub fn permuted(&self, perm: &[NodeId]) -> Result<Aig, AigError> {
        let n = self.nodes.len();
        if perm.len() != n {
            return Err(AigError::Invalid(format!("permutation length {} != node count {n}", perm.len())));
        }
        let mut nodes = vec![None; n];
        for (old, node) in self.nodes.iter().enumerate() {
            let slot = perm[old];
            if slot >= n || nodes[slot].is_some() {
                return Err(AigError::Invalid("not a permutation".into()));
            }
            let mut node = node.clone();
            for f in &mut node.fanins {
                *f = perm[*f];
            }
            nodes[slot] = Some(node);
        }
        let out = Aig {
            name: self.name.clone(),
            nodes: nodes.into_iter().map(Option::unwrap).collect(),
            pis: self.pis.iter().map(|&p| perm[p]).collect(),
            pos: self.pos.iter().map(|&p| perm[p]).collect(),
            constant: self.constant.map(|c| perm[c]),
        };
        validate_and_levelize(&out)
    }

    /// Canonical relabeling used for isomorphism checks: constant first, PIs
    /// in declaration order, then the remaining nodes level by level. Within
    /// a level nodes are ordered by a hash of their fanin cone and fanout
    /// context, then by the new positions of their fanins. AND fanins are
    /// sorted, so neither node order nor fanin order matters. Only twins that
    /// agree in both cone and context can still tie; those keep their
    /// relative order.
    pub fn canonical(&self) -> Aig {
        use std::hash::{DefaultHasher, Hash, Hasher};
        let n = self.nodes.len();
        let pi_index: HashMap<NodeId, usize> = self.pis.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut up = vec![0u64; n];
        let mut level = vec![0u32; n];
        for (v, node) in self.nodes.iter().enumerate() {
            let mut h = DefaultHasher::new();
            node.kind.index().hash(&mut h);
            let mut fk: Vec<u64> = node.fanins.iter().map(|&f| up[f]).collect();
            fk.sort_unstable();
            fk.hash(&mut h);
            pi_index.get(&v).hash(&mut h);
            (self.constant == Some(v)).hash(&mut h);
            up[v] = h.finish();
            level[v] = node.fanins.iter().map(|&f| level[f] + 1).max().unwrap_or(0);
        }
        let mut context: Vec<Vec<u64>> = vec![Vec::new(); n];
        for (k, &o) in self.pos.iter().enumerate() {
            context[o].push(k as u64);
        }
        let mut down = vec![0u64; n];
        for v in (0..n).rev() {
            let mut c = std::mem::take(&mut context[v]);
            c.sort_unstable();
            let mut h = DefaultHasher::new();
            (up[v], c).hash(&mut h);
            down[v] = h.finish();
            for &f in &self.nodes[v].fanins {
                context[f].push(down[v]);
            }
        }

        let mut order: Vec<NodeId> = self.constant.into_iter().chain(self.pis.iter().copied()).collect();
        let mut slot = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            slot[v] = i;
        }
        let mut rest: Vec<NodeId> = (0..n).filter(|&v| slot[v] == usize::MAX).collect();
        rest.sort_by_key(|&v| level[v]);
        for group in rest.chunk_by(|&a, &b| level[a] == level[b]) {
            let mut group: Vec<(u64, Vec<usize>, NodeId)> = group
                .iter()
                .map(|&v| {
                    let mut fp: Vec<usize> = self.nodes[v].fanins.iter().map(|&f| slot[f]).collect();
                    fp.sort_unstable();
                    (down[v], fp, v)
                })
                .collect();
            group.sort();
            for (_, _, v) in group {
                slot[v] = order.len();
                order.push(v);
            }
        }
        let mut perm = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let mut nodes: Vec<AigNode> = order
            .iter()
            .map(|&old| {
                let mut node = self.nodes[old].clone();
                for f in &mut node.fanins {
                    *f = perm[*f];
                }
                node.fanins.sort_unstable();
                node
            })
            .collect();
        recompute_levels(&mut nodes);
        Aig {
            name: self.name.clone(),
            nodes,
            pis: self.pis.iter().map(|&p| perm[p]).collect(),
            pos: self.pos.iter().map(|&p| perm[p]).collect(),
            constant: self.constant.map(|c| perm[c]),
        }
    }

    /// Structural equality after canonical relabeling; names are ignored.
    pub fn isomorphic(&self, other: &Aig) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        a.nodes == b.nodes && a.pis == b.pis && a.pos == b.pos && a.constant == b.constant
    }
}

/// Levels for nodes already in topological order.
pub(crate) fn recompute_levels(nodes: &mut [AigNode]) {
    for i in 0..nodes.len() {
        let level = nodes[i].fanins.iter().map(|&f| nodes[f].level + 1).max().unwrap_or(0);
        nodes[i].level = level;
    }
}
