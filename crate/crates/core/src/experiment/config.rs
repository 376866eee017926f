//! Experiment configuration: a flat `key = value` text format, with later
//! pairs (command-line overrides) replacing earlier ones.
//!
//! ```text
//! # SNNL-5 on 10k labelled MNIST examples
//! dataset = mnist
//! model = snnl-5
//! labelled_subset_size = 10000
//! seeds = 0, 1, 2, 3
//! output_dir = runs/snnl5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::Benchmark;
use crate::error::{Error, Result};
use crate::losses::{LossConfig, TemperatureSchedule, DEFAULT_ALPHA, DEFAULT_ETA, DEFAULT_FIXED_TEMPERATURE, DEFAULT_GAMMA};
use crate::nn::{AdamConfig, AutoencoderSpec, STANDARD_HIDDEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Mnist,
    FashionMnist,
    EmnistBalanced,
    /// Gaussian blobs generated from the run seed, see `synthetic_*` keys.
    SyntheticGaussian,
    /// `train_csv` / `test_csv` files with a trailing `label` column.
    Csv,
}

impl DatasetKind {
    pub fn benchmark(self) -> Option<Benchmark> {
        match self {
            DatasetKind::Mnist => Some(Benchmark::Mnist),
            DatasetKind::FashionMnist => Some(Benchmark::FashionMnist),
            DatasetKind::EmnistBalanced => Some(Benchmark::EmnistBalanced),
            _ => None,
        }
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mnist" => DatasetKind::Mnist,
            "fashion-mnist" => DatasetKind::FashionMnist,
            "emnist-balanced" => DatasetKind::EmnistBalanced,
            "synthetic-gaussian" => DatasetKind::SyntheticGaussian,
            "csv" => DatasetKind::Csv,
            other => {
                return Err(Error::Config(format!(
                    "unknown dataset {other:?}; expected mnist, fashion-mnist, emnist-balanced, synthetic-gaussian or csv"
                )))
            }
        })
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::FashionMnist => "fashion-mnist",
            DatasetKind::EmnistBalanced => "emnist-balanced",
            DatasetKind::SyntheticGaussian => "synthetic-gaussian",
            DatasetKind::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelKind {
    /// k-means on a PCA projection of the raw features; nothing is trained.
    OriginalPca,
    BaselineAe,
    /// One of the eight soft nearest neighbor configurations.
    Snnl(u8),
}

impl ModelKind {
    pub fn is_autoencoder(self) -> bool {
        !matches!(self, ModelKind::OriginalPca)
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original-pca" | "pca" => Ok(ModelKind::OriginalPca),
            "baseline-ae" => Ok(ModelKind::BaselineAe),
            _ => match s.strip_prefix("snnl-").and_then(|r| r.parse::<u8>().ok()) {
                Some(r @ 1..=8) => Ok(ModelKind::Snnl(r)),
                _ => Err(Error::Config(format!(
                    "unknown model {s:?}; expected original-pca, baseline-ae or snnl-1 .. snnl-8"
                ))),
            },
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::OriginalPca => f.write_str("original-pca"),
            ModelKind::BaselineAe => f.write_str("baseline-ae"),
            ModelKind::Snnl(r) => write!(f, "snnl-{r}"),
        }
    }
}

impl From<ModelKind> for String {
    fn from(m: ModelKind) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for ModelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub model: ModelKind,
    /// Root holding `mnist/`, `fashion-mnist/`, `emnist/`.
    pub data_dir: Option<PathBuf>,
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    /// Train (or fit PCA) on this many randomly drawn labelled training
    /// examples instead of the full training split.
    pub labelled_subset_size: Option<usize>,
    /// Evaluate on the first `n` test examples only.
    pub test_limit: Option<usize>,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub fixed_temperature: f64,
    pub snnl_layers: Vec<usize>,
    /// Number of clusters; defaults to the dataset's class count.
    pub k: Option<usize>,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    pub precision: Precision,
    pub silhouette_full_limit: usize,
    pub silhouette_sample_size: usize,
    pub synthetic_train_samples: usize,
    pub synthetic_test_samples: usize,
    pub synthetic_dim: usize,
    pub synthetic_classes: usize,
    pub synthetic_spread: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetKind::Mnist,
            model: ModelKind::Snnl(5),
            data_dir: None,
            train_csv: None,
            test_csv: None,
            labelled_subset_size: None,
            test_limit: None,
            latent_dim: 70,
            hidden: STANDARD_HIDDEN.to_vec(),
            epochs: 50,
            batch_size: 256,
            learning_rate: 1e-3,
            alpha: DEFAULT_ALPHA,
            eta: DEFAULT_ETA,
            gamma: DEFAULT_GAMMA,
            fixed_temperature: DEFAULT_FIXED_TEMPERATURE,
            snnl_layers: crate::losses::DEFAULT_SNNL_LAYERS.to_vec(),
            k: None,
            seeds: vec![0, 1, 2, 3],
            output_dir: None,
            precision: Precision::F64,
            silhouette_full_limit: 20_000,
            silhouette_sample_size: 10_000,
            synthetic_train_samples: 2_000,
            synthetic_test_samples: 1_000,
            synthetic_dim: 20,
            synthetic_classes: 4,
            synthetic_spread: 0.05,
        }
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn optional<T: FromStr>(key: &str, v: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if v.is_empty() || v == "none" {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

impl ExperimentConfig {
    /// Builds a config from defaults plus `pairs`, later pairs winning.
    /// `repeats`, if given, must agree with the number of `seeds`; on its own
    /// it selects seeds `0..repeats`.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            map.insert(k.as_ref().trim().replace('-', "_"), v.as_ref().trim().to_string());
        }
        let mut cfg = ExperimentConfig::default();
        let repeats = map.remove("repeats");
        let explicit_seeds = map.contains_key("seeds");
        for (k, v) in &map {
            cfg.set(k, v)?;
        }
        if let Some(r) = repeats {
            let r: usize = parse("repeats", &r)?;
            if explicit_seeds {
                if r != cfg.seeds.len() {
                    return Err(Error::Config(format!(
                        "repeats = {r} but {} seeds were given",
                        cfg.seeds.len()
                    )));
                }
            } else {
                cfg.seeds = (0..r as u64).collect();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = parse_pairs(&text)?;
        pairs.extend_from_slice(overrides);
        Self::from_pairs(pairs)
    }

    /// Sets one key. Keys are the field names; `-` and `_` are interchangeable.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let k = key.as_str();
        match k {
            "dataset" => self.dataset = v.parse()?,
            "model" => self.model = v.parse()?,
            "data_dir" => self.data_dir = optional(k, v)?,
            "train_csv" => self.train_csv = optional(k, v)?,
            "test_csv" => self.test_csv = optional(k, v)?,
            "labelled_subset_size" => self.labelled_subset_size = optional(k, v)?,
            "test_limit" => self.test_limit = optional(k, v)?,
            "latent_dim" | "c" => self.latent_dim = parse(k, v)?,
            "hidden" => self.hidden = parse_list(k, v)?,
            "epochs" => self.epochs = parse(k, v)?,
            "batch_size" => self.batch_size = parse(k, v)?,
            "learning_rate" | "lr" => self.learning_rate = parse(k, v)?,
            "alpha" => self.alpha = parse(k, v)?,
            "eta" => self.eta = parse(k, v)?,
            "gamma" => self.gamma = parse(k, v)?,
            "fixed_temperature" | "temperature" => self.fixed_temperature = parse(k, v)?,
            "snnl_layers" => self.snnl_layers = parse_list(k, v)?,
            "k" | "clusters" => self.k = optional(k, v)?,
            "seeds" => self.seeds = parse_list(k, v)?,
            "repeats" => self.seeds = (0..parse::<u64>(k, v)?).collect(),
            "output_dir" => self.output_dir = optional(k, v)?,
            "precision" => {
                self.precision = match v {
                    "f32" => Precision::F32,
                    "f64" => Precision::F64,
                    _ => return Err(Error::Config(format!("precision must be f32 or f64, got {v:?}"))),
                }
            }
            "silhouette_full_limit" => self.silhouette_full_limit = parse(k, v)?,
            "silhouette_sample_size" => self.silhouette_sample_size = parse(k, v)?,
            "synthetic_train_samples" => self.synthetic_train_samples = parse(k, v)?,
            "synthetic_test_samples" => self.synthetic_test_samples = parse(k, v)?,
            "synthetic_dim" => self.synthetic_dim = parse(k, v)?,
            "synthetic_classes" => self.synthetic_classes = parse(k, v)?,
            "synthetic_spread" => self.synthetic_spread = parse(k, v)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.latent_dim == 0 || self.hidden.iter().any(|&h| h == 0) {
            return bad("layer widths must be positive".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.k == Some(0) || self.labelled_subset_size == Some(0) {
            return bad("k and labelled_subset_size must be positive when set".into());
        }
        if self.dataset == DatasetKind::Csv && (self.train_csv.is_none() || self.test_csv.is_none()) {
            return bad("dataset = csv needs train_csv and test_csv".into());
        }
        if let Some(loss) = self.loss_config()? {
            loss.validate(2 * (self.hidden.len() + 1))?;
        }
        Ok(())
    }

    pub fn repeats(&self) -> usize {
        self.seeds.len()
    }

    pub fn schedule(&self, annealing: bool) -> TemperatureSchedule {
        if annealing {
            TemperatureSchedule::Annealing {
                eta: self.eta,
                gamma: self.gamma,
            }
        } else {
            TemperatureSchedule::Fixed {
                temperature: self.fixed_temperature,
            }
        }
    }

    /// Training objective, `None` for the PCA baseline.
    pub fn loss_config(&self) -> Result<Option<LossConfig>> {
        Ok(match self.model {
            ModelKind::OriginalPca => None,
            ModelKind::BaselineAe => Some(LossConfig::baseline()),
            ModelKind::Snnl(row) => {
                let mut loss = LossConfig::table_row(row)?;
                let annealing = row >= 5;
                let c = loss.snnl_mut().expect("table rows are composite");
                c.schedule = self.schedule(annealing);
                c.alpha = self.alpha;
                c.layers = self.snnl_layers.clone();
                Some(loss)
            }
        })
    }

    pub fn network_spec(&self, input_dim: usize) -> AutoencoderSpec {
        AutoencoderSpec {
            input_dim,
            hidden: self.hidden.clone(),
            latent_dim: self.latent_dim,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            ..AdamConfig::default()
        }
    }

    /// `key = value` text that parses back to this config.
    pub fn to_pairs_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |x| x.to_string());
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("dataset", self.dataset.to_string());
        put("model", self.model.to_string());
        put("data_dir", path(&self.data_dir));
        put("train_csv", path(&self.train_csv));
        put("test_csv", path(&self.test_csv));
        put("labelled_subset_size", opt(self.labelled_subset_size));
        put("test_limit", opt(self.test_limit));
        put("latent_dim", self.latent_dim.to_string());
        put("hidden", join(&self.hidden));
        put("epochs", self.epochs.to_string());
        put("batch_size", self.batch_size.to_string());
        put("learning_rate", format!("{:?}", self.learning_rate));
        put("alpha", format!("{:?}", self.alpha));
        put("eta", format!("{:?}", self.eta));
        put("gamma", format!("{:?}", self.gamma));
        put("fixed_temperature", format!("{:?}", self.fixed_temperature));
        put("snnl_layers", join(&self.snnl_layers));
        put("k", opt(self.k));
        put(
            "seeds",
            self.seeds.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
        );
        put("output_dir", path(&self.output_dir));
        put(
            "precision",
            match self.precision {
                Precision::F32 => "f32".into(),
                Precision::F64 => "f64".into(),
            },
        );
        put("silhouette_full_limit", self.silhouette_full_limit.to_string());
        put("silhouette_sample_size", self.silhouette_sample_size.to_string());
        put("synthetic_train_samples", self.synthetic_train_samples.to_string());
        put("synthetic_test_samples", self.synthetic_test_samples.to_string());
        put("synthetic_dim", self.synthetic_dim.to_string());
        put("synthetic_classes", self.synthetic_classes.to_string());
        put("synthetic_spread", format!("{:?}", self.synthetic_spread));
        s
    }
}
