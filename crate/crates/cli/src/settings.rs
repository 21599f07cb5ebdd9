//! Run settings shared by `label`, `train` and `eval`.
//!
//! Resolution order: built-in default, then the JSON config file, then flags.

use std::path::{Path, PathBuf};

use aignet::model::ModelConfig;
use aignet::sim::{DEFAULT_MC_PATTERNS, DEFAULT_PI_CAP};
use aignet::train::{Task, TrainConfig};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub layers: usize,
    pub hidden: usize,
    pub bases: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub patience: usize,
    pub task: Task,
    pub split: Vec<f64>,
    pub patterns: usize,
    pub truth_pis: usize,
    pub pairs: usize,
    pub seed: u64,
    pub single_embedding: bool,
    pub sum_agg: bool,
    pub no_basis: bool,
    pub reverse_edges: bool,
    pub threads: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let m = ModelConfig::default();
        let t = TrainConfig::default();
        Settings {
            layers: m.layers,
            hidden: m.hidden,
            bases: m.bases,
            lr: t.lr,
            batch: t.batch_size,
            epochs: t.epochs,
            patience: t.patience,
            task: t.task,
            split: vec![0.1, 0.1, 0.8],
            patterns: DEFAULT_MC_PATTERNS,
            truth_pis: DEFAULT_PI_CAP,
            pairs: t.pair_count,
            seed: 0,
            single_embedding: false,
            sum_agg: false,
            no_basis: false,
            reverse_edges: false,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl Settings {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            layers: self.layers,
            hidden: self.hidden,
            bases: self.bases,
            single_embedding: self.single_embedding,
            sum_aggregation: self.sum_agg,
            no_basis_decomposition: self.no_basis,
            reverse_edges: self.reverse_edges,
            seed: self.seed,
            ..ModelConfig::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch_size: self.batch,
            epochs: self.epochs,
            patience: self.patience,
            task: self.task,
            pair_count: self.pairs,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SettingsArgs {
    /// JSON file with any subset of the settings keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub bases: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Circuits per batch
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without validation improvement before stopping
    #[arg(long)]
    pub patience: Option<usize>,
    /// spp, ttdp or joint
    #[arg(long)]
    pub task: Option<Task>,
    /// train,val[,test] ratios, e.g. 0.1,0.1,0.8
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<f64>>,
    /// Monte-Carlo patterns for signal probabilities
    #[arg(long)]
    pub patterns: Option<usize>,
    /// Largest PI count that gets exhaustive truth tables
    #[arg(long)]
    pub truth_pis: Option<usize>,
    /// Node pairs sampled per circuit for the distance task
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub single_embedding: bool,
    #[arg(long)]
    pub sum_agg: bool,
    #[arg(long)]
    pub no_basis: bool,
    /// Also convolve over fanout edges
    #[arg(long)]
    pub reverse_edges: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SettingsArgs {
    pub fn resolve(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(path) => from_file(path)?,
            None => Settings::default(),
        };
        macro_rules! overlay {
            ($($f:ident),*) => { $(if let Some(v) = &self.$f { s.$f = v.clone(); })* };
        }
        overlay!(layers, hidden, bases, lr, batch, epochs, patience, task, split, patterns, truth_pis, pairs, seed, threads);
        s.single_embedding |= self.single_embedding;
        s.sum_agg |= self.sum_agg;
        s.no_basis |= self.no_basis;
        s.reverse_edges |= self.reverse_edges;
        if s.threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        if !(2..=3).contains(&s.split.len()) {
            return Err(CliError::Usage(format!("--split needs 2 or 3 ratios, got {}", s.split.len())));
        }
        if s.split.len() == 2 {
            s.split.push((1.0 - s.split[0] - s.split[1]).max(0.0));
        }
        s.model_config().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        s.train_config().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(s)
    }
}

/// Defaults overlaid with the keys present in `path`.
fn from_file(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let Value::Object(file) = file else {
        return Err(CliError::Usage(format!("{}: expected a JSON object", path.display())));
    };
    let mut merged = serde_json::to_value(Settings::default()).expect("settings serialize");
    let obj = merged.as_object_mut().expect("object");
    for (k, v) in file {
        if !obj.contains_key(&k) {
            return Err(CliError::Usage(format!("{}: unknown setting {k:?}", path.display())));
        }
        obj.insert(k, v);
    }
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"layers": 5, "hidden": 16}"#).unwrap();
        let args = SettingsArgs { config: Some(path), layers: Some(7), ..Default::default() };
        let s = args.resolve().unwrap();
        assert_eq!((s.layers, s.hidden, s.bases), (7, 16, 2));
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"layerz": 5}"#).unwrap();
        let args = SettingsArgs { config: Some(path), ..Default::default() };
        assert!(matches!(args.resolve(), Err(CliError::Usage(_))));
    }

    #[test]
    fn defaults_follow_library_defaults() {
        let s = Settings::default();
        assert_eq!(s.model_config(), ModelConfig { seed: 0, ..ModelConfig::default() });
        assert_eq!(s.train_config(), TrainConfig::default());
        assert_eq!(s.split, [0.1, 0.1, 0.8]);
    }
}
