//! Geometry-based scores on Euclidean distance: silhouette,
//! Calinski-Harabasz and Davies-Bouldin.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::contingency::compact_ids;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::Real;

fn dist<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y).as_f64();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn check<T>(points: &ArrayView2<T>, pred: &[usize]) -> Result<(Vec<usize>, usize)> {
    if points.nrows() != pred.len() {
        return Err(Error::Argument(format!(
            "{} points but {} cluster ids",
            points.nrows(),
            pred.len()
        )));
    }
    let (ids, k) = compact_ids(pred);
    if k < 2 {
        return Err(Error::UndefinedMetric(format!(
            "needs at least 2 clusters, found {k}"
        )));
    }
    Ok((ids, k))
}

/// Mean silhouette. Singleton clusters score 0, as does a point with
/// `a = b = 0`.
pub fn silhouette<T: Real>(points: ArrayView2<T>, pred: &[usize]) -> Result<f64> {
    let (ids, k) = check(&points, pred)?;
    let points = points.as_standard_layout();
    let n = points.nrows();
    let mut sizes = vec![0usize; k];
    for &c in &ids {
        sizes[c] += 1;
    }
    let rows: Vec<&[T]> = points.rows().into_iter().map(|r| r.to_slice().unwrap()).collect();
    let mut total = 0.0;
    let mut sums = vec![0.0f64; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[ids[j]] += dist(rows[i], rows[j]);
            }
        }
        let own = ids[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

/// Full silhouette up to `full_limit` points, otherwise the silhouette of a
/// uniform `sample_size` subsample drawn with `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SilhouetteSampling {
    pub full_limit: usize,
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for SilhouetteSampling {
    fn default() -> Self {
        SilhouetteSampling {
            full_limit: 20_000,
            sample_size: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteScore {
    pub value: f64,
    /// `Some(seed)` when the value comes from a subsample.
    pub sample_seed: Option<u64>,
}

pub fn silhouette_sampled<T: Real>(
    points: ArrayView2<T>,
    pred: &[usize],
    sampling: &SilhouetteSampling,
) -> Result<SilhouetteScore> {
    if points.nrows() <= sampling.full_limit {
        return Ok(SilhouetteScore {
            value: silhouette(points, pred)?,
            sample_seed: None,
        });
    }
    let mut rng = rng_from_seed(sampling.seed);
    let mut idx = rand::seq::index::sample(&mut rng, points.nrows(), sampling.sample_size.min(points.nrows())).into_vec();
    idx.sort_unstable();
    let sub = points.select(Axis(0), &idx);
    let sub_pred: Vec<usize> = idx.iter().map(|&i| pred[i]).collect();
    Ok(SilhouetteScore {
        value: silhouette(sub.view(), &sub_pred)?,
        sample_seed: Some(sampling.seed),
    })
}

fn centroids<T: Real>(points: &ArrayView2<T>, ids: &[usize], k: usize) -> (Array2<f64>, Vec<usize>) {
    let mut c = Array2::<f64>::zeros((k, points.ncols()));
    let mut sizes = vec![0usize; k];
    for (row, &id) in points.rows().into_iter().zip(ids) {
        sizes[id] += 1;
        let mut cr = c.row_mut(id);
        cr.zip_mut_with(&row, |a, &b| *a += b.as_f64());
    }
    for (mut row, &s) in c.rows_mut().into_iter().zip(&sizes) {
        row /= s as f64;
    }
    (c, sizes)
}

/// `Tr(B) / Tr(W) * (N - k) / (k - 1)`; `+inf` when every cluster has zero
/// spread.
pub fn calinski_harabasz<T: Real>(points: ArrayView2<T>, pred: &[usize]) -> Result<f64> {
    let (ids, k) = check(&points, pred)?;
    let n = points.nrows();
    if k >= n {
        return Err(Error::UndefinedMetric(format!(
            "Calinski-Harabasz needs fewer clusters than points ({k} >= {n})"
        )));
    }
    let (cent, sizes) = centroids(&points, &ids, k);
    let overall = points.mapv(|v| v.as_f64()).mean_axis(Axis(0)).unwrap();
    let tr_b: f64 = (0..k)
        .map(|q| {
            let d = (&cent.row(q) - &overall).mapv(|v| v * v).sum();
            sizes[q] as f64 * d
        })
        .sum();
    let tr_w: f64 = points
        .rows()
        .into_iter()
        .zip(&ids)
        .map(|(r, &q)| {
            r.iter()
                .zip(cent.row(q))
                .map(|(&x, &c)| {
                    let d = x.as_f64() - c;
                    d * d
                })
                .sum::<f64>()
        })
        .sum();
    if tr_w == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(tr_b / tr_w * (n - k) as f64 / (k - 1) as f64)
}

/// Mean over clusters of the worst `(s_i + s_j) / d_ij`; `+inf` when two
/// centroids coincide.
pub fn davies_bouldin<T: Real>(points: ArrayView2<T>, pred: &[usize]) -> Result<f64> {
    let (ids, k) = check(&points, pred)?;
    let (cent, sizes) = centroids(&points, &ids, k);
    let mut spread = vec![0.0f64; k];
    for (r, &q) in points.rows().into_iter().zip(&ids) {
        let d: f64 = r
            .iter()
            .zip(cent.row(q))
            .map(|(&x, &c)| {
                let d = x.as_f64() - c;
                d * d
            })
            .sum();
        spread[q] += d.sqrt();
    }
    for (s, &n) in spread.iter_mut().zip(&sizes) {
        *s /= n as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if j == i {
                continue;
            }
            let d = dist(cent.row(i).to_slice().unwrap(), cent.row(j).to_slice().unwrap());
            let r = if d == 0.0 {
                f64::INFINITY
            } else {
                (spread[i] + spread[j]) / d
            };
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / k as f64)
}
