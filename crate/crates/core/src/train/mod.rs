//! Dataset splits, the training loop and the evaluation metrics.

mod metrics;

pub use metrics::{
    evaluate_spp, evaluate_ttdp, normalize_distances, read_metrics, render_table, spp_metrics, ttdp_metrics, ttdp_residuals, MetricRecord,
    MetricsReport, TableRow, TaskMetrics,
};

use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aig::{batch_union, Aig};
use crate::error::{NumericsError, TrainError};
use crate::model::{GraphIndex, Model};
use crate::numerics::{AdamState, LossKind, Tape, Tensor, Var};
use crate::sim::{derive_seed, hamming_distance_normalized, sample_node_pairs, CircuitLabels};

/// A circuit together with its ground truth.
#[derive(Debug, Clone)]
pub struct Sample {
    pub aig: Aig,
    pub labels: CircuitLabels,
}

impl Sample {
    pub fn new(aig: Aig, labels: CircuitLabels) -> Result<Self, TrainError> {
        if labels.len() != aig.len() {
            return Err(TrainError::LabelMismatch { circuit: aig.name.clone(), expected: aig.len(), found: labels.len() });
        }
        Ok(Sample { aig, labels })
    }
}

/// Pairs each circuit with the label set of the same name.
pub fn attach_labels(circuits: Vec<Aig>, labels: Vec<CircuitLabels>) -> Result<Vec<Sample>, TrainError> {
    let mut by_name: std::collections::HashMap<String, CircuitLabels> =
        labels.into_iter().map(|l| (l.name.clone(), l)).collect();
    circuits
        .into_iter()
        .map(|aig| {
            let l = by_name.remove(&aig.name).ok_or_else(|| TrainError::MissingLabels(aig.name.clone()))?;
            Sample::new(aig, l)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub ratios: [f64; 3],
    pub seed: u64,
}

/// Index form of [`split_dataset`].
pub fn split_indices(n: usize, ratios: &[f64], seed: u64) -> Result<[Vec<usize>; 3], TrainError> {
    if n == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    if !(2..=3).contains(&ratios.len()) || ratios.iter().any(|r| !(0.0..=1.0).contains(r) || r.is_nan()) {
        return Err(TrainError::Ratios(format!("{ratios:?}")));
    }
    if ratios.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(TrainError::Ratios(format!("{ratios:?} sums above 1")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // the small slack keeps e.g. 0.1 * 10 from flooring to 0 after rounding
    let count = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
    let n_train = count(ratios[0]);
    let n_val = count(ratios[1]).min(n - n_train);
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Ok([order, val, test])
}

/// Deterministic shuffle, then `floor(ratio * N)` circuits for train and
/// validation; the remainder goes to test.
pub fn split_dataset(names: &[String], ratios: &[f64], seed: u64) -> Result<DatasetSplit, TrainError> {
    let [a, b, c] = split_indices(names.len(), ratios, seed)?;
    let pick = |ix: Vec<usize>| ix.into_iter().map(|i| names[i].clone()).collect();
    let r2 = ratios.get(2).copied().unwrap_or(1.0 - ratios[0] - ratios[1]);
    Ok(DatasetSplit { train: pick(a), val: pick(b), test: pick(c), ratios: [ratios[0], ratios[1], r2], seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Spp,
    Ttdp,
    Joint,
}

impl Task {
    pub fn has_spp(self) -> bool {
        matches!(self, Task::Spp | Task::Joint)
    }

    pub fn has_ttdp(self) -> bool {
        matches!(self, Task::Ttdp | Task::Joint)
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spp" => Ok(Task::Spp),
            "ttdp" => Ok(Task::Ttdp),
            "joint" => Ok(Task::Joint),
            other => Err(format!("unknown task {other:?} (expected spp, ttdp or joint)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub task: Task,
    pub pair_count: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 0.001, batch_size: 256, epochs: 800, patience: 50, task: Task::Joint, pair_count: 100, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::Config(format!("learning rate {}", self.lr)));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.patience == 0 {
            return Err(TrainError::Config("batch size, epochs and patience must be positive".into()));
        }
        if self.task.has_ttdp() && self.pair_count == 0 {
            return Err(TrainError::Config("pair count must be positive for the distance task".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation loss.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Mean wall time of the training part of an epoch, in seconds.
    pub t_avg: f64,
    pub stopped_early: bool,
}

/// One disjoint-union batch with its loss targets.
struct Batch {
    graph: GraphIndex,
    spp_target: Tensor,
    left: Arc<[usize]>,
    right: Arc<[usize]>,
    pair_segment: Arc<[usize]>,
    dist_target: Tensor,
    circuits: usize,
}

impl Batch {
    /// `pair_seed(k)` gives the pair-sampling seed of batch member `k`.
    fn new(samples: &[&Sample], task: Task, pair_count: usize, reverse_edges: bool, pair_seed: impl Fn(usize) -> u64) -> Result<Self, TrainError> {
        let union = batch_union(samples.iter().map(|s| &s.aig));
        let spp: Vec<f64> = samples.iter().flat_map(|s| s.labels.signal_prob.iter().copied()).collect();
        let (mut left, mut right, mut seg, mut dist) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        if task.has_ttdp() {
            for (k, s) in samples.iter().enumerate() {
                let offset = union.offsets[k];
                let pairs = sample_node_pairs(s.aig.len(), pair_count, pair_seed(k)).pairs;
                let mut dt = Vec::with_capacity(pairs.len());
                for &(i, j) in &pairs {
                    dt.push(hamming_distance_normalized(&s.labels.tables[i], &s.labels.tables[j])?);
                    left.push(offset + i);
                    right.push(offset + j);
                    seg.push(k);
                }
                dist.extend(normalize_distances(&dt));
            }
        }
        Ok(Batch {
            graph: GraphIndex::new(&union.aig, reverse_edges),
            spp_target: Tensor::column(&spp),
            left: left.into(),
            right: right.into(),
            pair_segment: seg.into(),
            dist_target: Tensor::column(&dist),
            circuits: samples.len(),
        })
    }

    /// Records the task loss; returns it with the number of loss elements.
    fn loss(&self, model: &Model, tape: &mut Tape, p: &[Var], task: Task) -> Result<Var, TrainError> {
        let e = model.forward(tape, p, &self.graph)?;
        let mut total: Option<Var> = None;
        if task.has_spp() {
            let y = model.readout_spp(tape, p, e.z)?;
            let t = tape.constant(self.spp_target.clone());
            total = Some(tape.loss(LossKind::L1, y, t)?);
        }
        if task.has_ttdp() && !self.left.is_empty() {
            let zl = tape.gather_rows(e.z, self.left.clone())?;
            let zr = tape.gather_rows(e.z, self.right.clone())?;
            let dz = tape.cosine_distance_rows(zl, zr)?;
            let dz = tape.minmax_normalize(dz, self.pair_segment.clone(), self.circuits)?;
            let t = tape.constant(self.dist_target.clone());
            let l = tape.loss(LossKind::L1, dz, t)?;
            total = Some(match total {
                Some(a) => tape.add(a, l)?,
                None => l,
            });
        }
        Ok(match total {
            Some(v) => v,
            None => tape.constant(Tensor::scalar(0.0)),
        })
    }

    fn weight(&self) -> f64 {
        self.spp_target.len().max(1) as f64
    }
}

fn diverged(epoch: usize) -> impl Fn(TrainError) -> TrainError {
    move |e| match e {
        TrainError::Numerics(NumericsError::NonFinite(_)) => TrainError::Diverged { epoch, loss: f64::NAN },
        TrainError::Model(crate::error::ModelError::Numerics(NumericsError::NonFinite(_))) => {
            TrainError::Diverged { epoch, loss: f64::NAN }
        }
        other => other,
    }
}

/// Node-weighted mean task loss over `samples`, batched like training.
/// Pair sets are fixed by `seed`.
pub fn dataset_loss(model: &Model, samples: &[&Sample], cfg: &TrainConfig, seed: u64) -> Result<f64, TrainError> {
    let (mut sum, mut weight) = (0.0, 0.0);
    for (b, chunk) in samples.chunks(cfg.batch_size).enumerate() {
        let base = b * cfg.batch_size;
        let batch = Batch::new(chunk, cfg.task, cfg.pair_count, model.config().reverse_edges, |k| derive_seed(seed, (base + k) as u64))?;
        let mut tape = Tape::new();
        let p = model.bind(&mut tape, false);
        let l = batch.loss(model, &mut tape, &p, cfg.task)?;
        sum += tape.value(l).item() * batch.weight();
        weight += batch.weight();
    }
    Ok(if weight > 0.0 { sum / weight } else { 0.0 })
}

/// Adam on disjoint-union batches with early stopping on validation loss
/// (training loss when `val` is empty). Returns the best-validation model.
pub fn train(mut model: Model, train: &[&Sample], val: &[&Sample], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let reverse = model.config().reverse_edges;
    let val_seed = derive_seed(cfg.seed, u64::MAX);
    let mut adam = AdamState::new(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, model.params.clone());
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut train_seconds = 0.0;

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let (mut sum, mut weight) = (0.0, 0.0);
        for chunk in order.chunks(cfg.batch_size) {
            let members: Vec<&Sample> = chunk.iter().map(|&i| train[i]).collect();
            let batch = Batch::new(&members, cfg.task, cfg.pair_count, reverse, |k| {
                derive_seed(derive_seed(cfg.seed, chunk[k] as u64), epoch as u64)
            })?;
            let mut tape = Tape::new();
            let p = model.bind(&mut tape, true);
            let loss = batch.loss(&model, &mut tape, &p, cfg.task).map_err(diverged(epoch))?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(TrainError::Diverged { epoch, loss: value });
            }
            tape.backward(loss)?;
            let grads: Vec<Tensor> = p.iter().map(|&v| tape.grad(v)).collect();
            drop(tape);
            adam.step(&mut model.params, &grads, cfg.lr)?;
            sum += value * batch.weight();
            weight += batch.weight();
        }
        let seconds = start.elapsed().as_secs_f64();
        train_seconds += seconds;
        let train_loss = sum / weight;
        let val_loss = if val.is_empty() {
            dataset_loss(&model, train, cfg, val_seed)
        } else {
            dataset_loss(&model, val, cfg, val_seed)
        }
        .map_err(diverged(epoch))?;
        log::info!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6} ({seconds:.2}s)");
        history.push(EpochRecord { epoch, train_loss, val_loss, seconds });
        if val_loss < best.0 {
            best = (val_loss, epoch, model.params.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = epoch < cfg.epochs;
                break;
            }
        }
    }
    let t_avg = train_seconds / history.len() as f64;
    model.params = best.2;
    Ok(TrainOutcome { model, history, best_epoch: best.1, best_val_loss: best.0, t_avg, stopped_early })
}
