use std::sync::Arc;

use crate::aig::{Aig, NodeKind};
use crate::numerics::Tensor;

/// Edge list of one relation: item `e` carries node `src[e]` into `dst[e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub name: &'static str,
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
}

/// Precomputed relation edge lists and initial features for a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphIndex {
    node_count: usize,
    features: Tensor,
    pub(crate) relations: Vec<Relation>,
}

impl GraphIndex {
    /// Relations `into_and` and `into_not`, plus `from_and` and `from_not`
    /// (the same edges reversed) when `reverse_edges` is set. Features are
    /// one-hot node kinds.
    pub fn new(aig: &Aig, reverse_edges: bool) -> Self {
        let features = Tensor::from_vec(aig.len(), 3, aig.kind_features()).expect("kind features are N x 3");
        Self::with_features(aig, features, reverse_edges)
    }

    pub fn with_features(aig: &Aig, features: Tensor, reverse_edges: bool) -> Self {
        let (mut and_e, mut not_e) = (Vec::new(), Vec::new());
        for (u, v) in aig.edges() {
            match aig.kind(v) {
                NodeKind::And => and_e.push((u, v)),
                NodeKind::Not => not_e.push((u, v)),
                NodeKind::Pi => unreachable!("PI nodes have no fanins"),
            }
        }
        let rel = |name, edges: &[(usize, usize)], rev: bool| {
            let (s, d): (Vec<usize>, Vec<usize>) = edges.iter().map(|&(u, v)| if rev { (v, u) } else { (u, v) }).unzip();
            Relation { name, src: s.into(), dst: d.into() }
        };
        let mut relations = vec![rel("into_and", &and_e, false), rel("into_not", &not_e, false)];
        if reverse_edges {
            relations.push(rel("from_and", &and_e, true));
            relations.push(rel("from_not", &not_e, true));
        }
        GraphIndex { node_count: aig.len(), features, relations }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn set_features(&mut self, features: Tensor) {
        assert_eq!(features.rows(), self.node_count, "one feature row per node");
        self.features = features;
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, r: usize) -> &Relation {
        &self.relations[r]
    }
}
