//! Experiment configuration: a versioned TOML file describing the model,
//! the dataset, and the training/benchmark settings. Command-line flags
//! override individual fields.
//!
//! ```toml
//! version = 1
//!
//! [model]
//! input_dim = 2
//! layers = [{ kind = "quadratic", width = 6, act = "sigmoid", q_init = "zero" }]
//!
//! [dataset]
//! kind = "clusters"        # xor | clusters | mnist | csv | file
//! seed = 7
//! train_per_class = 500
//! test_per_class = 500
//!
//! [train]
//! eta = 1e-4
//! epochs = 2000
//! seed = 1
//!
//! [bench]
//! trials = 5
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use qnn_core::datasets::{
    self, cluster_dataset, six_cluster_specs, xor_dataset, CsvSchema, XorEncoding,
};
use qnn_core::layers::{init_layer, LayerKind, QInit};
use qnn_core::network::Network;
use qnn_core::tensor::Rng;
use qnn_core::{ActivationKind, Dataset64, Network64, TrainConfig64};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub model: ModelConfig,
    pub dataset: DatasetConfig,
    pub train: TrainSection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub layers: Vec<LayerConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub kind: String,
    pub width: usize,
    #[serde(default = "default_act")]
    pub act: String,
    /// Quadratic layers only: "zero", "identity", or "random".
    #[serde(default = "default_q_init")]
    pub q_init: String,
    /// Scale for `q_init = "random"`.
    #[serde(default = "default_q_scale")]
    pub q_scale: f64,
}

fn default_act() -> String {
    "sigmoid".to_string()
}

fn default_q_init() -> String {
    "zero".to_string()
}

fn default_q_scale() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: String,
    // clusters
    #[serde(default)]
    pub seed: u64,
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    // xor
    pub encoding: Option<String>,
    // mnist
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    // csv
    pub path: Option<PathBuf>,
    pub label_column: Option<usize>,
    pub class_count: Option<usize>,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub normalize: bool,
    pub split_fraction: Option<f64>,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default)]
    pub stratify: bool,
    // file (dataset dumps produced by `qnn gen`)
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub eta: f64,
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub shuffle: bool,
    #[serde(default)]
    pub log_every: usize,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// 0 = one worker per available core, capped by the trial count.
    #[serde(default)]
    pub workers: usize,
}

fn default_trials() -> usize {
    5
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.version != 1 {
            bail!("config version {} unsupported (expected 1)", cfg.version);
        }
        if cfg.model.layers.is_empty() {
            bail!("model needs at least one layer");
        }
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig64 {
        TrainConfig64 {
            eta: self.train.eta,
            epochs: self.train.epochs,
            seed: self.train.seed,
            shuffle: self.train.shuffle,
            log_every: self.train.log_every,
        }
    }
}

impl ModelConfig {
    /// Initialize a fresh network; `seed` drives all random draws.
    pub fn build(&self, seed: u64) -> Result<Network64> {
        let mut rng = Rng::new(seed);
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut width = self.input_dim;
        for (i, spec) in self.layers.iter().enumerate() {
            let kind: LayerKind = spec
                .kind
                .parse()
                .with_context(|| format!("model layer {i}"))?;
            let act: ActivationKind = spec
                .act
                .parse()
                .with_context(|| format!("model layer {i}"))?;
            let q_init = match spec.q_init.as_str() {
                "zero" => QInit::Zero,
                "identity" => QInit::Identity,
                "random" => QInit::SymmetricRandom(spec.q_scale),
                other => bail!("model layer {i}: unknown q_init '{other}'"),
            };
            let layer = init_layer(kind, width, spec.width, act, &q_init, &mut rng)
                .with_context(|| format!("model layer {i}"))?;
            width = spec.width;
            layers.push(layer);
        }
        Ok(Network::new(self.input_dim, layers)?)
    }
}

impl DatasetConfig {
    /// Materialize the train set and, when the kind defines one, the test
    /// set.
    pub fn build(&self) -> Result<(Dataset64, Option<Dataset64>)> {
        match self.kind.as_str() {
            "xor" => {
                let encoding = match self.encoding.as_deref() {
                    None | Some("binary") => XorEncoding::Binary,
                    Some("bipolar") => XorEncoding::Bipolar,
                    Some(other) => bail!("unknown xor encoding '{other}'"),
                };
                Ok((xor_dataset(encoding), None))
            }
            "clusters" => {
                let specs = six_cluster_specs::<f64>(
                    self.train_per_class.unwrap_or(2000),
                    self.test_per_class.unwrap_or(500),
                );
                let (train, test) = cluster_dataset(&specs, self.seed)?;
                Ok((train, Some(test)))
            }
            "mnist" => {
                let (ti, tl) = match (&self.train_images, &self.train_labels) {
                    (Some(i), Some(l)) => (i, l),
                    _ => bail!("mnist dataset needs train_images and train_labels"),
                };
                let train = datasets::load_mnist(ti, tl)?;
                let test = match (&self.test_images, &self.test_labels) {
                    (Some(i), Some(l)) => Some(datasets::load_mnist(i, l)?),
                    (None, None) => None,
                    _ => bail!("mnist test set needs both test_images and test_labels"),
                };
                Ok((train, test))
            }
            "csv" => {
                let path = self.path.as_ref().context("csv dataset needs path")?;
                let schema = CsvSchema {
                    label_column: self.label_column.context("csv dataset needs label_column")?,
                    class_count: self.class_count.context("csv dataset needs class_count")?,
                    has_header: self.has_header,
                    columns: None,
                    min_max_normalize: self.normalize,
                };
                let full = datasets::load_csv(path, &schema)?;
                match self.split_fraction {
                    Some(fraction) => {
                        let (train, test) =
                            datasets::split(&full, fraction, self.split_seed, self.stratify)?;
                        Ok((train, Some(test)))
                    }
                    None => Ok((full, None)),
                }
            }
            "file" => {
                let train_path =
                    self.train_path.as_ref().context("file dataset needs train_path")?;
                let train = Dataset64::load(train_path)?;
                let test = match &self.test_path {
                    Some(p) => Some(Dataset64::load(p)?),
                    None => None,
                };
                Ok((train, test))
            }
            other => bail!("unknown dataset kind '{other}'"),
        }
    }
}
