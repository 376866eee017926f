//! Lloyd's k-means with k-means++ seeding.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::Real;

/// Centroid movement threshold, relative to the data's RMS spread.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const PROTOCOL_RUNS: usize = 9;
pub const PROTOCOL_ITER_STEP: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult<T> {
    /// `k x m`.
    pub centroids: Array2<T>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their assigned centroid.
    pub inertia: T,
    pub iterations_run: usize,
    pub converged: bool,
    pub seed: u64,
    /// Inertia after each assignment step, ending with the final assignment.
    pub inertia_trace: Vec<T>,
}

fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!(
            "k-means needs 1 <= k <= N, got k={k} N={n}"
        )));
    }
    Ok(())
}

/// k-means++ seeding: first centroid uniform, each further one drawn with
/// probability proportional to its squared distance to the nearest chosen
/// centroid. Returns the chosen row indices.
pub fn kmeans_pp_indices<T: Real>(points: ArrayView2<T>, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let n = points.nrows();
    check_k(n, k)?;
    let points = points.as_standard_layout();
    let row = |i: usize| points.row(i).to_slice().unwrap();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(row(i), row(chosen[0])).as_f64())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every point coincides with a chosen centroid
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, w) in d2.iter_mut().enumerate() {
            let d = squared_distance(row(i), row(next)).as_f64();
            if d < *w {
                *w = d;
            }
        }
    }
    Ok(chosen)
}

pub fn kmeans_pp_seed<T: Real>(points: ArrayView2<T>, k: usize, seed: u64) -> Result<Array2<T>> {
    let idx = kmeans_pp_indices(points, k, &mut rng_from_seed(seed))?;
    Ok(points.select(Axis(0), &idx))
}

struct Assignment<T> {
    labels: Vec<usize>,
    d2: Vec<T>,
}

fn assign<T: Real>(points: &ArrayView2<T>, centroids: &Array2<T>) -> Assignment<T> {
    let mut labels = Vec::with_capacity(points.nrows());
    let mut d2 = Vec::with_capacity(points.nrows());
    for p in points.rows() {
        let p = p.to_slice().unwrap();
        let mut best = (T::infinity(), 0);
        for (j, c) in centroids.rows().into_iter().enumerate() {
            let d = squared_distance(p, c.to_slice().unwrap());
            if d < best.0 {
                best = (d, j);
            }
        }
        labels.push(best.1);
        d2.push(best.0);
    }
    Assignment { labels, d2 }
}

/// Lloyd iterations from a k-means++ start. Stops when no centroid moves
/// more than the tolerance or after `max_iters` update steps; the returned
/// assignment is always recomputed against the final centroids.
pub fn kmeans<T: Real>(points: ArrayView2<T>, k: usize, max_iters: usize, seed: u64) -> Result<ClusterResult<T>> {
    let n = points.nrows();
    let mut rng = rng_from_seed(seed);
    let start = kmeans_pp_indices(points, k, &mut rng)?;
    let points = points.as_standard_layout();
    let pv = points.view();
    let mut centroids = pv.select(Axis(0), &start);
    let tol = T::of(DEFAULT_TOLERANCE) * rms_spread(&pv);
    let tol2 = tol * tol;

    let mut trace = Vec::new();
    let mut iterations_run = 0;
    let mut converged = false;
    for iter in 1..=max_iters {
        let Assignment { mut labels, mut d2 } = assign(&pv, &centroids);
        reseed_empty(&mut labels, &mut d2, k);
        trace.push(d2.iter().copied().sum::<T>());

        let mut sums = Array2::<T>::zeros(centroids.dim());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut s = sums.row_mut(l);
            s += &pv.row(i);
        }
        let mut max_shift = T::zero();
        for j in 0..k {
            let mean = &sums.row(j) / T::of(counts[j] as f64);
            let shift = squared_distance(mean.as_slice().unwrap(), centroids.row(j).to_slice().unwrap());
            max_shift = max_shift.max(shift);
            centroids.row_mut(j).assign(&mean);
        }
        iterations_run = iter;
        if max_shift <= tol2 {
            converged = true;
            break;
        }
    }
    let Assignment { labels, d2 } = assign(&pv, &centroids);
    let inertia = d2.iter().copied().sum::<T>();
    trace.push(inertia);
    debug_assert_eq!(labels.len(), n);
    Ok(ClusterResult {
        centroids,
        assignments: labels,
        inertia,
        iterations_run,
        converged,
        seed,
        inertia_trace: trace,
    })
}

/// Moves the point farthest from its centroid (taken from a cluster with at
/// least two members) into each empty cluster.
fn reseed_empty<T: Real>(labels: &mut [usize], d2: &mut [T], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| d2[a].partial_cmp(&d2[b]).unwrap_or(std::cmp::Ordering::Equal));
        let Some(far) = far else { return };
        counts[labels[far]] -= 1;
        labels[far] = empty;
        counts[empty] = 1;
        d2[far] = T::zero();
    }
}

fn rms_spread<T: Real>(points: &ArrayView2<T>) -> T {
    let n = points.nrows();
    if n == 0 {
        return T::zero();
    }
    let mean = points.mean_axis(Axis(0)).unwrap();
    let ss: T = points
        .rows()
        .into_iter()
        .map(|r| squared_distance(r.to_slice().unwrap(), mean.as_slice().unwrap()))
        .sum();
    (ss / T::of((n * points.ncols().max(1)) as f64)).sqrt()
}

/// Nine independent restarts; run `r` (1-based) is capped at `10 r`
/// iterations and seeded from `(base_seed, r)`. The ninth run is the one to
/// report, see [`reporting_run`].
pub fn nine_run_protocol<T: Real>(points: ArrayView2<T>, k: usize, base_seed: u64) -> Result<Vec<ClusterResult<T>>> {
    (1..=PROTOCOL_RUNS)
        .map(|r| kmeans(points, k, PROTOCOL_ITER_STEP * r, derive_seed(base_seed, r as u64)))
        .collect()
}

pub fn reporting_run<T>(runs: &[ClusterResult<T>]) -> &ClusterResult<T> {
    runs.last().expect("protocol produces nine runs")
}
