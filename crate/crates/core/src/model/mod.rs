//! Polarity-dual relational graph network over inverter-explicit AIGs.
//!
//! Each node carries a positive and a negative embedding. A layer runs a
//! relational convolution per polarity, builds AND messages from fanin
//! Hadamard products and NOT messages from fanin max/min, and fuses them
//! with a self term. The relation weights are shared between the
//! convolution and the messages of a layer.

mod config;
mod graph;

pub use config::ModelConfig;
pub use graph::{GraphIndex, Relation};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aig::Aig;
use crate::error::ModelError;
use crate::numerics::{
    config_hash, cosine_distance, read_checkpoint, write_checkpoint, Checkpoint, CheckpointManifest, ParamEntry,
    Reduce, Tape, Tensor, Var,
};

const INTO_AND: usize = 0;
const INTO_NOT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Po,
    Ne,
}

impl Polarity {
    fn tag(self) -> &'static str {
        match self {
            Polarity::Po => "po",
            Polarity::Ne => "ne",
        }
    }
}

/// Parameter indices of one polarity within one layer.
#[derive(Debug, Clone)]
struct PolarityParams {
    bases: Vec<usize>,
    coef: Option<usize>,
    /// Direct relation weights when basis decomposition is off.
    direct: Vec<usize>,
    self_w: usize,
}

#[derive(Debug, Clone)]
struct LayerParams {
    po: PolarityParams,
    ne: PolarityParams,
}

impl LayerParams {
    fn get(&self, p: Polarity) -> &PolarityParams {
        match p {
            Polarity::Po => &self.po,
            Polarity::Ne => &self.ne,
        }
    }
}

#[derive(Debug, Clone)]
struct Layout {
    init_po: usize,
    init_ne: usize,
    layers: Vec<LayerParams>,
    norm_gain: usize,
    norm_bias: usize,
    readout: [usize; 4],
}

/// Node states of both polarities after some layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarityState {
    pub h_po: Var,
    pub h_ne: Var,
    pub layer: usize,
}

/// Expanded per-relation weights of one layer, indexed by relation.
#[derive(Debug, Clone)]
pub struct LayerWeights {
    pub po: Vec<Var>,
    pub ne: Vec<Var>,
    pub self_po: Var,
    pub self_ne: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct Embeddings {
    pub state: PolarityState,
    /// Layer-normalized `[h_po, h_ne]`, `N x 2d`.
    pub z: Var,
}

#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    layout: Layout,
    names: Vec<String>,
    pub params: Vec<Tensor>,
}

impl Model {
    /// Builds a model with seeded Glorot-uniform weights, unit norm gain and
    /// zero biases.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (d, d0, rels) = (config.hidden, config.d0, config.relation_count());
        let mut names = Vec::new();
        let mut params = Vec::new();
        let mut add = |name: String, t: Tensor| {
            names.push(name);
            params.push(t);
            params.len() - 1
        };
        let init_po = add("init.w_po".into(), Tensor::glorot(d, 2 * d0, &mut rng));
        let init_ne = add("init.w_ne".into(), Tensor::glorot(d, 2 * d0, &mut rng));
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let mut pol = |p: Polarity| {
                let prefix = format!("layer{l}.{}", p.tag());
                let (mut bases, mut coef, mut direct) = (Vec::new(), None, Vec::new());
                if config.no_basis_decomposition {
                    for r in config.relation_names() {
                        direct.push(add(format!("{prefix}.rel_{r}"), Tensor::glorot(d, d, &mut rng)));
                    }
                } else {
                    for b in 0..config.bases {
                        bases.push(add(format!("{prefix}.basis{b}"), Tensor::glorot(d, d, &mut rng)));
                    }
                    coef = Some(add(format!("{prefix}.coef"), Tensor::glorot(rels, config.bases, &mut rng)));
                }
                let self_w = add(format!("{prefix}.self"), Tensor::glorot(d, d, &mut rng));
                PolarityParams { bases, coef, direct, self_w }
            };
            let po = pol(Polarity::Po);
            let ne = pol(Polarity::Ne);
            layers.push(LayerParams { po, ne });
        }
        let norm_gain = add("norm.gain".into(), Tensor::filled(1, 2 * d, 1.0));
        let norm_bias = add("norm.bias".into(), Tensor::zeros(1, 2 * d));
        let readout = [
            add("readout.w1".into(), Tensor::glorot(d, 2 * d, &mut rng)),
            add("readout.b1".into(), Tensor::zeros(1, d)),
            add("readout.w2".into(), Tensor::glorot(1, d, &mut rng)),
            add("readout.b2".into(), Tensor::zeros(1, 1)),
        ];
        let layout = Layout { init_po, init_ne, layers, norm_gain, norm_bias, readout };
        Ok(Model { config, layout, names, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(move |i| &mut self.params[i])
    }

    /// Records all parameters as leaves; `trainable` controls gradient flow.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.clone(), trainable)).collect()
    }

    /// Same as [`Model::bind`] but with caller-supplied parameter values.
    pub fn bind_values(&self, tape: &mut Tape, values: &[Tensor]) -> Result<Vec<Var>, ModelError> {
        if values.len() != self.params.len() || values.iter().zip(&self.params).any(|(a, b)| a.shape() != b.shape()) {
            return Err(ModelError::Config("parameter values do not match the model layout".into()));
        }
        Ok(values.iter().map(|p| tape.leaf(p.clone(), true)).collect())
    }

    /// Initialization embeddings. AND nodes see the mean fanin feature in the
    /// positive space, NOT nodes in the negative space; every other slot is
    /// zero-concatenated with the node's own feature.
    pub fn init_embeddings(&self, tape: &mut Tape, p: &[Var], g: &GraphIndex) -> Result<PolarityState, ModelError> {
        if g.features().cols() != self.config.d0 {
            return Err(ModelError::FeatureWidth { expected: self.config.d0, found: g.features().cols() });
        }
        let n = g.node_count();
        let h0 = tape.constant(g.features().clone());
        let and_in = g.relation(INTO_AND);
        let not_in = g.relation(INTO_NOT);
        let and_mean = tape.neighbor_reduce(Reduce::Mean, h0, and_in.src.clone(), and_in.dst.clone(), n)?;
        let not_mean = tape.neighbor_reduce(Reduce::Mean, h0, not_in.src.clone(), not_in.dst.clone(), n)?;
        let x_po = tape.concat_cols(and_mean, h0)?;
        let h_po = tape.linear(x_po, p[self.layout.init_po])?;
        let h_po = tape.tanh(h_po)?;
        if self.config.single_embedding {
            return Ok(PolarityState { h_po, h_ne: h_po, layer: 0 });
        }
        let x_ne = tape.concat_cols(not_mean, h0)?;
        let h_ne = tape.linear(x_ne, p[self.layout.init_ne])?;
        let h_ne = tape.tanh(h_ne)?;
        Ok(PolarityState { h_po, h_ne, layer: 0 })
    }

    /// `W_r = sum_b a_rb V_b` for every relation, or the stored matrices when
    /// decomposition is off.
    pub fn expand_bases(&self, tape: &mut Tape, p: &[Var], layer: usize, pol: Polarity) -> Result<Vec<Var>, ModelError> {
        let lp = self.layout.layers[layer].get(pol);
        match lp.coef {
            None => Ok(lp.direct.iter().map(|&i| p[i]).collect()),
            Some(c) => {
                let bases: Vec<Var> = lp.bases.iter().map(|&i| p[i]).collect();
                (0..self.config.relation_count())
                    .map(|r| tape.basis_combine(p[c], r, &bases).map_err(ModelError::from))
                    .collect()
            }
        }
    }

    pub fn layer_weights(&self, tape: &mut Tape, p: &[Var], layer: usize) -> Result<LayerWeights, ModelError> {
        let lp = &self.layout.layers[layer];
        Ok(LayerWeights {
            po: self.expand_bases(tape, p, layer, Polarity::Po)?,
            ne: self.expand_bases(tape, p, layer, Polarity::Ne)?,
            self_po: p[lp.po.self_w],
            self_ne: p[lp.ne.self_w],
        })
    }

    /// Normalized sum over relations: `sum_r mean_{j in N_i^r} W_r h_j`.
    fn relational_sum(&self, tape: &mut Tape, g: &GraphIndex, w: &[Var], h: Var) -> Result<Var, ModelError> {
        let n = g.node_count();
        let mut acc: Option<Var> = None;
        for (r, rel) in g.relations().iter().enumerate() {
            if rel.src.is_empty() {
                continue;
            }
            // mean_j (W h_j) = W mean_j h_j
            let mean = tape.neighbor_reduce(Reduce::Mean, h, rel.src.clone(), rel.dst.clone(), n)?;
            let term = tape.linear(mean, w[r])?;
            acc = Some(match acc {
                None => term,
                Some(a) => tape.add(a, term)?,
            });
        }
        Ok(match acc {
            Some(a) => a,
            None => tape.constant(Tensor::zeros(n, self.config.hidden)),
        })
    }

    /// `h~ = tanh(sum_r mean_{N_i^r} W_r h_j + W_0 h_i)` per polarity.
    pub fn relational_conv(
        &self,
        tape: &mut Tape,
        g: &GraphIndex,
        w: &LayerWeights,
        state: PolarityState,
    ) -> Result<PolarityState, ModelError> {
        let conv = |tape: &mut Tape, rel_w: &[Var], self_w: Var, h: Var| -> Result<Var, ModelError> {
            let msg = self.relational_sum(tape, g, rel_w, h)?;
            let own = tape.linear(h, self_w)?;
            let s = tape.add(msg, own)?;
            Ok(tape.tanh(s)?)
        };
        let h_po = conv(tape, &w.po, w.self_po, state.h_po)?;
        let h_ne = if self.config.single_embedding { h_po } else { conv(tape, &w.ne, w.self_ne, state.h_ne)? };
        Ok(PolarityState { h_po, h_ne, layer: state.layer })
    }

    /// `m_i = mean_{j in fanin} (W^Po h_j^Po) * (W^Ne h_j^Ne)` over AND
    /// fanins; zero rows for other nodes.
    pub fn aggregate_and(&self, tape: &mut Tape, g: &GraphIndex, w: &LayerWeights, state: PolarityState) -> Result<Var, ModelError> {
        let rel = g.relation(INTO_AND);
        let a = tape.linear(state.h_po, w.po[INTO_AND])?;
        let b = tape.linear(state.h_ne, w.ne[INTO_AND])?;
        let prod = tape.hadamard(a, b)?;
        Ok(tape.neighbor_reduce(Reduce::Mean, prod, rel.src.clone(), rel.dst.clone(), g.node_count())?)
    }

    /// `m_i = W^Ne max_j h_j^Po - W^Po min_j h_j^Ne` over NOT fanins; zero
    /// rows for other nodes.
    pub fn aggregate_not(&self, tape: &mut Tape, g: &GraphIndex, w: &LayerWeights, state: PolarityState) -> Result<Var, ModelError> {
        let rel = g.relation(INTO_NOT);
        let n = g.node_count();
        let mx = tape.neighbor_reduce(Reduce::Max, state.h_po, rel.src.clone(), rel.dst.clone(), n)?;
        let mn = tape.neighbor_reduce(Reduce::Min, state.h_ne, rel.src.clone(), rel.dst.clone(), n)?;
        let a = tape.linear(mx, w.ne[INTO_NOT])?;
        let b = tape.linear(mn, w.po[INTO_NOT])?;
        Ok(tape.sub(a, b)?)
    }

    /// `h'^Po = tanh(W_0^Po h^Po + m_and)`, `h'^Ne = tanh(W_0^Ne h^Ne + m_not)`.
    pub fn update_states(
        &self,
        tape: &mut Tape,
        w: &LayerWeights,
        state: PolarityState,
        m_and: Var,
        m_not: Var,
    ) -> Result<PolarityState, ModelError> {
        let fuse = |tape: &mut Tape, self_w: Var, h: Var, m: Var| -> Result<Var, ModelError> {
            let own = tape.linear(h, self_w)?;
            let s = tape.add(own, m)?;
            Ok(tape.tanh(s)?)
        };
        if self.config.single_embedding {
            let m = tape.add(m_and, m_not)?;
            let h = fuse(tape, w.self_po, state.h_po, m)?;
            return Ok(PolarityState { h_po: h, h_ne: h, layer: state.layer + 1 });
        }
        let h_po = fuse(tape, w.self_po, state.h_po, m_and)?;
        let h_ne = fuse(tape, w.self_ne, state.h_ne, m_not)?;
        Ok(PolarityState { h_po, h_ne, layer: state.layer + 1 })
    }

    /// One full layer: convolution, messages, update.
    pub fn layer(&self, tape: &mut Tape, p: &[Var], g: &GraphIndex, state: PolarityState) -> Result<PolarityState, ModelError> {
        let w = self.layer_weights(tape, p, state.layer)?;
        let mid = self.relational_conv(tape, g, &w, state)?;
        let (m_and, m_not) = if self.config.sum_aggregation {
            let m_po = self.relational_sum(tape, g, &w.po, mid.h_po)?;
            let m_ne = if self.config.single_embedding {
                tape.constant(Tensor::zeros(g.node_count(), self.config.hidden))
            } else {
                self.relational_sum(tape, g, &w.ne, mid.h_ne)?
            };
            (m_po, m_ne)
        } else {
            (self.aggregate_and(tape, g, &w, mid)?, self.aggregate_not(tape, g, &w, mid)?)
        };
        self.update_states(tape, &w, mid, m_and, m_not)
    }

    pub fn forward(&self, tape: &mut Tape, p: &[Var], g: &GraphIndex) -> Result<Embeddings, ModelError> {
        let mut state = self.init_embeddings(tape, p, g)?;
        for _ in 0..self.config.layers {
            state = self.layer(tape, p, g, state)?;
        }
        let cat = tape.concat_cols(state.h_po, state.h_ne)?;
        let z = tape.layer_norm(cat, p[self.layout.norm_gain], p[self.layout.norm_bias])?;
        Ok(Embeddings { state, z })
    }

    /// Per-node probability head: `sigmoid(w2 tanh(w1 z + b1) + b2)`.
    pub fn readout_spp(&self, tape: &mut Tape, p: &[Var], z: Var) -> Result<Var, ModelError> {
        let width = tape.value(z).cols();
        if width != 2 * self.config.hidden {
            return Err(ModelError::FeatureWidth { expected: 2 * self.config.hidden, found: width });
        }
        let [w1, b1, w2, b2] = self.layout.readout.map(|i| p[i]);
        let h = tape.linear(z, w1)?;
        let h = tape.add_row(h, b1)?;
        let h = tape.tanh(h)?;
        let y = tape.linear(h, w2)?;
        let y = tape.add_row(y, b2)?;
        Ok(tape.sigmoid(y)?)
    }

    /// Inference-only embeddings `z` for every node.
    pub fn embed(&self, g: &GraphIndex) -> Result<Tensor, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape, false);
        let e = self.forward(&mut tape, &p, g)?;
        Ok(tape.value(e.z).clone())
    }

    /// Inference-only embeddings and signal-probability predictions.
    pub fn predict(&self, g: &GraphIndex) -> Result<(Tensor, Vec<f64>), ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape, false);
        let e = self.forward(&mut tape, &p, g)?;
        let y = self.readout_spp(&mut tape, &p, e.z)?;
        Ok((tape.value(e.z).clone(), tape.value(y).data().to_vec()))
    }

    pub fn predict_aig(&self, aig: &Aig) -> Result<(Tensor, Vec<f64>), ModelError> {
        self.predict(&GraphIndex::new(aig, self.config.reverse_edges))
    }

    pub fn to_checkpoint(&self, payload: &str) -> Checkpoint {
        let config = serde_json::to_value(&self.config).expect("config serializes");
        Checkpoint {
            manifest: CheckpointManifest {
                seed: self.config.seed,
                config_hash: config_hash(&config),
                config,
                payload: payload.into(),
                params: self
                    .names
                    .iter()
                    .zip(&self.params)
                    .map(|(n, t)| ParamEntry { name: n.clone(), rows: t.rows(), cols: t.cols() })
                    .collect(),
            },
            tensors: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self, ModelError> {
        let config: ModelConfig = serde_json::from_value(ckpt.manifest.config.clone())
            .map_err(|e| ModelError::Checkpoint(format!("config: {e}")))?;
        let mut model = Model::new(config)?;
        let names: Vec<&str> = ckpt.manifest.params.iter().map(|e| e.name.as_str()).collect();
        if names != model.names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(ModelError::Checkpoint("parameter names do not match the configuration".into()));
        }
        for (slot, t) in model.params.iter_mut().zip(ckpt.tensors) {
            if slot.shape() != t.shape() {
                return Err(ModelError::Checkpoint(format!("shape {:?} where {:?} expected", t.shape(), slot.shape())));
            }
            *slot = t;
        }
        Ok(model)
    }

    /// Writes `path` (manifest) and a `.bin` payload beside it.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let payload = path.with_extension("bin");
        let payload = payload.file_name().and_then(|s| s.to_str()).unwrap_or("model.bin").to_string();
        write_checkpoint(path, &self.to_checkpoint(&payload))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Model::from_checkpoint(read_checkpoint(path)?)
    }
}

/// Cosine distance between two embedding rows.
pub fn pair_distance(z_i: &[f64], z_j: &[f64]) -> Result<f64, ModelError> {
    if z_i.len() != z_j.len() {
        return Err(ModelError::FeatureWidth { expected: z_i.len(), found: z_j.len() });
    }
    Ok(cosine_distance(z_i, z_j).0)
}
