use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Every field is written out explicitly when serialized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Initial feature width (one-hot node kind by default).
    pub d0: usize,
    pub hidden: usize,
    pub layers: usize,
    pub bases: usize,
    pub single_embedding: bool,
    pub sum_aggregation: bool,
    pub no_basis_decomposition: bool,
    /// Adds fanout relations (`from_and`, `from_not`) to the convolution.
    pub reverse_edges: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d0: 3,
            hidden: 64,
            layers: 12,
            bases: 2,
            single_embedding: false,
            sum_aggregation: false,
            no_basis_decomposition: false,
            reverse_edges: false,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d0 == 0 || self.hidden == 0 || self.bases == 0 {
            return Err(ModelError::Config("d0, hidden and bases must be at least 1".into()));
        }
        Ok(())
    }

    pub fn relation_names(&self) -> &'static [&'static str] {
        if self.reverse_edges {
            &["into_and", "into_not", "from_and", "from_not"]
        } else {
            &["into_and", "into_not"]
        }
    }

    pub fn relation_count(&self) -> usize {
        self.relation_names().len()
    }

    /// Short run label used in reports, e.g. `AIGer` or `AIGer(Sum_Agg)`.
    pub fn variant_name(&self) -> String {
        let mut tags = Vec::new();
        if self.single_embedding {
            tags.push("Single_Emb");
        }
        if self.sum_aggregation {
            tags.push("Sum_Agg");
        }
        if self.no_basis_decomposition {
            tags.push("NoDec");
        }
        if tags.is_empty() {
            "AIGer".into()
        } else {
            format!("AIGer({})", tags.join(","))
        }
    }
}
