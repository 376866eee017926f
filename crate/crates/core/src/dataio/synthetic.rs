use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::Dataset;
use crate::error::Result;
use crate::rng::rng_from_seed;
use crate::Real;

/// `n` standard-normal points in `dim` dimensions with labels drawn uniformly
/// from `[0, classes)`; the labels carry no geometric signal.
pub fn random_labelled_gaussian(
    n: usize,
    dim: usize,
    classes: usize,
    seed: u64,
) -> (Array2<f64>, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let points = Array2::from_shape_simple_fn((n, dim), || StandardNormal.sample(&mut rng));
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    (points, labels)
}

/// Labelled Gaussian blobs clipped to `[0, 1]`: class means uniform in
/// `[0.15, 0.85]^dim`, isotropic standard deviation `spread`.
pub fn gaussian_blobs<T: Real>(
    n: usize,
    dim: usize,
    classes: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    let mut rng = rng_from_seed(seed);
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.random_range(0.15..0.85)).collect())
        .collect();
    let noise = Normal::new(0.0, spread.max(0.0)).expect("non-negative spread");
    let labels: Vec<usize> = (0..n).map(|i| i % classes.max(1)).collect();
    let features = Array2::from_shape_fn((n, dim), |(i, j)| {
        let v: f64 = means[labels[i]][j] + noise.sample(&mut rng);
        T::of(v.clamp(0.0, 1.0))
    });
    Dataset::new(features, Some(labels), "synthetic-gaussian", classes)
}
