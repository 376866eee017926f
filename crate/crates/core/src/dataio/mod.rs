//! Datasets: IDX parsing, labelled-subset sampling and mini-batching.

mod idx;
mod matrix_io;
mod synthetic;

use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

pub use idx::{read_maybe_gz, IdxImages, IdxLabels, IMAGES_MAGIC, LABELS_MAGIC};
pub use matrix_io::{
    read_binary_matrix, read_labelled_csv, write_binary_matrix, write_labelled_csv,
};
pub use synthetic::{gaussian_blobs, random_labelled_gaussian};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::Real;

/// Feature matrix in `[0, 1]` with optional class labels in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: Array2<T>,
    pub labels: Option<Vec<usize>>,
    pub name: String,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub features: Array2<T>,
    pub labels: Option<Vec<usize>>,
    /// Source rows in the parent dataset.
    pub indices: Vec<usize>,
}

impl<T: Real> Dataset<T> {
    pub fn new(
        features: Array2<T>,
        labels: Option<Vec<usize>>,
        name: impl Into<String>,
        num_classes: usize,
    ) -> Result<Self> {
        if let Some(v) = features.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Consistency(format!(
                "feature value {v} outside [0, 1]"
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != features.nrows() {
                return Err(Error::Consistency(format!(
                    "{} labels for {} feature rows",
                    labels.len(),
                    features.nrows()
                )));
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
                return Err(Error::Consistency(format!(
                    "label {bad} outside [0, {num_classes})"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            name: name.into(),
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            name: self.name.clone(),
            num_classes: self.num_classes,
        }
    }

    /// Builds a dataset from parsed IDX containers; pixels are scaled by 1/255.
    pub fn from_idx(
        images: &IdxImages,
        labels: Option<&IdxLabels>,
        name: impl Into<String>,
        num_classes: Option<usize>,
    ) -> Result<Self> {
        if let Some(l) = labels {
            if l.labels.len() != images.count {
                return Err(Error::Consistency(format!(
                    "{} images but {} labels",
                    images.count,
                    l.labels.len()
                )));
            }
        }
        let scale = T::of(1.0 / 255.0);
        let pixels: Vec<T> = images.pixels.iter().map(|&p| T::of(p as f64) * scale).collect();
        let features = Array2::from_shape_vec((images.count, images.dim()), pixels)
            .expect("pixel buffer length checked by the parser");
        let labels: Option<Vec<usize>> =
            labels.map(|l| l.labels.iter().map(|&b| b as usize).collect());
        let k = num_classes.unwrap_or_else(|| {
            labels
                .as_ref()
                .and_then(|l| l.iter().max())
                .map_or(0, |&m| m + 1)
        });
        Dataset::new(features, labels, name, k)
    }
}

/// Options for [`load_idx_with`].
#[derive(Debug, Clone, Default)]
pub struct IdxOptions {
    pub name: Option<String>,
    pub num_classes: Option<usize>,
    /// Transpose each image on load (EMNIST orientation fix).
    pub transpose: bool,
}

pub fn load_idx<T: Real>(images_path: &Path, labels_path: Option<&Path>) -> Result<Dataset<T>> {
    load_idx_with(images_path, labels_path, &IdxOptions::default())
}

pub fn load_idx_with<T: Real>(
    images_path: &Path,
    labels_path: Option<&Path>,
    opts: &IdxOptions,
) -> Result<Dataset<T>> {
    let mut images = IdxImages::parse(&read_maybe_gz(images_path)?)?;
    if opts.transpose {
        images = images.transposed();
    }
    let labels = labels_path
        .map(|p| read_maybe_gz(p).and_then(|b| IdxLabels::parse(&b)))
        .transpose()?;
    let name = opts.name.clone().unwrap_or_else(|| {
        images_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Dataset::from_idx(&images, labels.as_ref(), name, opts.num_classes)
}

/// The image benchmarks the pipeline knows how to locate on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Mnist,
    FashionMnist,
    EmnistBalanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Benchmark {
    pub fn num_classes(self) -> usize {
        match self {
            Benchmark::Mnist | Benchmark::FashionMnist => 10,
            Benchmark::EmnistBalanced => 47,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Mnist => "mnist",
            Benchmark::FashionMnist => "fashion-mnist",
            Benchmark::EmnistBalanced => "emnist-balanced",
        }
    }

    fn subdir(self) -> &'static str {
        match self {
            Benchmark::Mnist => "mnist",
            Benchmark::FashionMnist => "fashion-mnist",
            Benchmark::EmnistBalanced => "emnist",
        }
    }

    fn file_stems(self, split: Split) -> (String, String) {
        let prefix = match (self, split) {
            (Benchmark::EmnistBalanced, Split::Train) => "emnist-balanced-train",
            (Benchmark::EmnistBalanced, Split::Test) => "emnist-balanced-test",
            (_, Split::Train) => "train",
            (_, Split::Test) => "t10k",
        };
        (
            format!("{prefix}-images-idx3-ubyte"),
            format!("{prefix}-labels-idx1-ubyte"),
        )
    }

    /// Image and label paths under `root/<subdir>/`, preferring uncompressed files.
    pub fn paths(self, root: &Path, split: Split) -> Result<(PathBuf, PathBuf)> {
        let dir = root.join(self.subdir());
        let (img, lab) = self.file_stems(split);
        let find = |stem: &str| -> Result<PathBuf> {
            let plain = dir.join(stem);
            if plain.is_file() {
                return Ok(plain);
            }
            let gz = dir.join(format!("{stem}.gz"));
            if gz.is_file() {
                return Ok(gz);
            }
            Err(Error::io(
                plain,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
            ))
        };
        Ok((find(&img)?, find(&lab)?))
    }

    pub fn load<T: Real>(self, root: &Path, split: Split) -> Result<Dataset<T>> {
        let (img, lab) = self.paths(root, split)?;
        let split_name = match split {
            Split::Train => "train",
            Split::Test => "test",
        };
        let opts = IdxOptions {
            name: Some(format!("{}-{split_name}", self.name())),
            num_classes: Some(self.num_classes()),
            transpose: self == Benchmark::EmnistBalanced,
        };
        load_idx_with(&img, Some(&lab), &opts)
    }
}

/// Uniform sample of `n` labelled rows without replacement, in sampled order.
pub fn sample_labelled_subset<T: Real>(ds: &Dataset<T>, n: usize, seed: u64) -> Result<Dataset<T>> {
    if ds.labels.is_none() {
        return Err(Error::Argument(format!(
            "dataset {} has no labels to sample from",
            ds.name
        )));
    }
    if n > ds.len() {
        return Err(Error::Argument(format!(
            "cannot sample {n} rows from a dataset of {}",
            ds.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let indices = rand::seq::index::sample(&mut rng, ds.len(), n).into_vec();
    Ok(ds.select(&indices))
}

/// One epoch of shuffled mini-batches. A trailing batch with fewer than two
/// rows is dropped.
pub fn batches<T: Real>(ds: &Dataset<T>, batch_size: usize, shuffle_seed: u64) -> Result<Vec<Batch<T>>> {
    if batch_size < 2 {
        return Err(Error::Argument(format!(
            "batch size must be at least 2, got {batch_size}"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng_from_seed(shuffle_seed));
    Ok(order
        .chunks(batch_size)
        .filter(|c| c.len() >= 2)
        .map(|idx| Batch {
            features: ds.features.select(Axis(0), idx),
            labels: ds.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            indices: idx.to_vec(),
        })
        .collect())
}

/// Batches for a given epoch: the shuffle seed is derived from `(seed, epoch)`.
pub fn epoch_batches<T: Real>(
    ds: &Dataset<T>,
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Result<Vec<Batch<T>>> {
    batches(ds, batch_size, derive_seed(seed, 1_000 + epoch as u64))
}
