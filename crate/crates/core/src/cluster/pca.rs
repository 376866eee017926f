//! PCA through a cyclic Jacobi eigendecomposition of the sample covariance.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::Real;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaProjector<T> {
    pub mean: Array1<T>,
    /// `c x d`, orthonormal rows, strongest direction first.
    pub components: Array2<T>,
    /// Variance along each component, non-increasing.
    pub explained_variance: Array1<T>,
}

pub fn pca_fit<T: Real>(points: ArrayView2<T>, c: usize) -> Result<PcaProjector<T>> {
    let (n, d) = points.dim();
    if c == 0 || c > n.min(d) {
        return Err(Error::Argument(format!(
            "PCA needs 1 <= c <= min(N, d) = {}, got c={c}",
            n.min(d)
        )));
    }
    let mean = points.mean_axis(Axis(0)).expect("n >= 1");
    let centered = &points - &mean;
    let denom = T::of((n.max(2) - 1) as f64);
    let cov = centered.t().dot(&centered) / denom;
    let (values, vectors) = symmetric_eigen(cov)?;
    Ok(PcaProjector {
        mean,
        components: vectors.slice(ndarray::s![..c, ..]).to_owned(),
        explained_variance: values.slice(ndarray::s![..c]).mapv(|v| v.max(T::zero())),
    })
}

impl<T: Real> PcaProjector<T> {
    pub fn transform(&self, points: ArrayView2<T>) -> Result<Array2<T>> {
        if points.ncols() != self.mean.len() {
            return Err(Error::shape("PCA input columns", self.mean.len(), points.ncols()));
        }
        Ok((&points - &self.mean).dot(&self.components.t()))
    }

    pub fn inverse_transform(&self, codes: ArrayView2<T>) -> Array2<T> {
        codes.dot(&self.components) + &self.mean
    }
}

/// Eigenvalues (descending) and unit eigenvectors (as rows) of a symmetric
/// matrix, by cyclic Jacobi rotations. Each eigenvector's largest-magnitude
/// entry is made positive so results are reproducible.
pub fn symmetric_eigen<T: Real>(mut a: Array2<T>) -> Result<(Array1<T>, Array2<T>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::shape("symmetric_eigen", (n, n), a.dim()));
    }
    // rows of `vt` are eigenvectors so rotations touch contiguous memory
    let mut vt = Array2::<T>::eye(n);
    let total: T = a.iter().map(|&v| v * v).sum();
    let stop = T::of(1e-30) * total;
    let hundred = T::of(100.0);
    let half = T::of(0.5);
    let mut sweep = 0;
    loop {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[[p, q]] * a[[p, q]];
            }
        }
        if off <= stop || total == T::zero() {
            break;
        }
        sweep += 1;
        if sweep > MAX_SWEEPS {
            return Err(Error::NonFinite(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        let a_s = a.as_slice_mut().expect("owned standard layout");
        let v_s = vt.as_slice_mut().unwrap();
        for p in 0..n {
            for q in p + 1..n {
                let apq = a_s[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a_s[p * n + p];
                let aqq = a_s[q * n + q];
                let g = hundred * apq.abs();
                if sweep > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a_s[p * n + q] = T::zero();
                    a_s[q * n + p] = T::zero();
                    continue;
                }
                let theta = half * (aqq - app) / apq;
                let mut t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                if theta < T::zero() {
                    t = -t;
                }
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let tau = s / (T::one() + c);
                a_s[p * n + p] = app - t * apq;
                a_s[q * n + q] = aqq + t * apq;
                a_s[p * n + q] = T::zero();
                a_s[q * n + p] = T::zero();
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let gk = a_s[p * n + k];
                    let hk = a_s[q * n + k];
                    let np = gk - s * (hk + gk * tau);
                    let nq = hk + s * (gk - hk * tau);
                    a_s[p * n + k] = np;
                    a_s[q * n + k] = nq;
                    a_s[k * n + p] = np;
                    a_s[k * n + q] = nq;
                }
                for k in 0..n {
                    let gk = v_s[p * n + k];
                    let hk = v_s[q * n + k];
                    v_s[p * n + k] = gk - s * (hk + gk * tau);
                    v_s[q * n + k] = hk + s * (gk - hk * tau);
                }
            }
        }
    }
    let diag: Vec<T> = (0..n).map(|i| a[[i, i]]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vt.select(Axis(0), &order);
    for mut row in vectors.rows_mut() {
        let pivot = row
            .iter()
            .copied()
            .fold(T::zero(), |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < T::zero() {
            row.mapv_inplace(|v| -v);
        }
    }
    Ok((values, vectors))
}
