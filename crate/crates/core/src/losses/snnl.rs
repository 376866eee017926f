//! Soft nearest neighbor loss on cosine distance.
//!
//! For each point `i` with a non-empty positive set `P(i)`:
//!
//! ```text
//! l_i = -log( sum_{j in P(i)} exp(-dist_ij / T) / sum_{k != i} exp(-dist_ik / T) )
//! ```
//!
//! with `dist = 1 - cos`. The loss is the mean of `l_i` over points that have
//! at least one positive. Supervised positives share the label of `i`; the
//! unsupervised positive of `i` is its nearest neighbour in raw input space.
//! Both log-sums are evaluated with max subtraction so small temperatures do
//! not underflow.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::Real;

/// Rows with a smaller L2 norm are divided by this instead of their norm.
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SnnlOutput<T> {
    pub value: T,
    /// Gradient of `value` with respect to the activations.
    pub grad: Array2<T>,
    /// Number of points with a non-empty positive set.
    pub contributing: usize,
}

pub fn snnl<T: Real>(acts: ArrayView2<T>, labels: &[usize], temperature: T) -> Result<SnnlOutput<T>> {
    if labels.len() != acts.nrows() {
        return Err(Error::shape("snnl labels", acts.nrows(), labels.len()));
    }
    snnl_with_positives(acts, temperature, |i, j| labels[i] == labels[j])
}

pub fn snnl_unsupervised<T: Real>(
    acts: ArrayView2<T>,
    raw_inputs: ArrayView2<T>,
    temperature: T,
) -> Result<SnnlOutput<T>> {
    if raw_inputs.nrows() != acts.nrows() {
        return Err(Error::shape("snnl raw inputs", acts.nrows(), raw_inputs.nrows()));
    }
    if acts.nrows() < 3 {
        return Err(Error::Argument(format!(
            "unsupervised soft nearest neighbor loss needs at least 3 points, got {}",
            acts.nrows()
        )));
    }
    let nn = nearest_neighbors(raw_inputs);
    snnl_with_positives(acts, temperature, |i, j| nn[i] == j)
}

/// Index of each row's nearest other row by cosine distance (ties go to the
/// lower index).
pub fn nearest_neighbors<T: Real>(points: ArrayView2<T>) -> Vec<usize> {
    let (u, _) = normalize_rows(points);
    let cos = u.dot(&u.t());
    (0..points.nrows())
        .map(|i| {
            let mut best = usize::MAX;
            let mut best_cos = T::neg_infinity();
            for j in 0..points.nrows() {
                if j != i && cos[[i, j]] > best_cos {
                    best_cos = cos[[i, j]];
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Unit rows (rows below [`NORM_FLOOR`] are scaled by the floor) and the
/// effective divisors.
pub(crate) fn normalize_rows<T: Real>(a: ArrayView2<T>) -> (Array2<T>, Array1<T>) {
    let floor = T::of(NORM_FLOOR);
    let norms: Array1<T> = a
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|&v| v * v).sum::<T>().sqrt().max(floor))
        .collect();
    let u = &a / &norms.view().insert_axis(Axis(1));
    (u, norms)
}

pub(crate) fn snnl_with_positives<T: Real>(
    acts: ArrayView2<T>,
    temperature: T,
    positive: impl Fn(usize, usize) -> bool,
) -> Result<SnnlOutput<T>> {
    let b = acts.nrows();
    if b < 2 {
        return Err(Error::Argument(format!(
            "soft nearest neighbor loss needs at least 2 points, got {b}"
        )));
    }
    if !(temperature > T::zero()) {
        return Err(Error::Argument(format!("temperature must be positive, got {temperature}")));
    }
    let (u, norms) = normalize_rows(acts);
    let cos = u.dot(&u.t());
    let inv_t = T::one() / temperature;

    // coef[i][j] = d l_i / d logit_ij
    let mut coef = Array2::<T>::zeros((b, b));
    let mut total = T::zero();
    let mut contributing = 0usize;
    let mut logits = vec![T::zero(); b];
    let mut is_pos = vec![false; b];
    let mut e_all = vec![T::zero(); b];
    let mut e_pos = vec![T::zero(); b];
    for i in 0..b {
        let (mut m_all, mut m_pos) = (T::neg_infinity(), T::neg_infinity());
        for j in 0..b {
            if j == i {
                is_pos[j] = false;
                continue;
            }
            let l = (cos[[i, j]] - T::one()) * inv_t;
            logits[j] = l;
            is_pos[j] = positive(i, j);
            m_all = m_all.max(l);
            if is_pos[j] {
                m_pos = m_pos.max(l);
            }
        }
        if m_pos == T::neg_infinity() {
            continue;
        }
        contributing += 1;
        // log-sum-exp over all candidates and over positives, each shifted
        // by its own maximum
        let (mut s_all, mut s_pos) = (T::zero(), T::zero());
        for k in (0..b).filter(|&k| k != i) {
            e_all[k] = (logits[k] - m_all).exp();
            s_all += e_all[k];
            if is_pos[k] {
                e_pos[k] = (logits[k] - m_pos).exp();
                s_pos += e_pos[k];
            }
        }
        total += (m_all + s_all.ln()) - (m_pos + s_pos.ln());
        for k in (0..b).filter(|&k| k != i) {
            let mut c = e_all[k] / s_all;
            if is_pos[k] {
                c -= e_pos[k] / s_pos;
            }
            coef[[i, k]] = c;
        }
    }
    if contributing == 0 {
        return Err(Error::NoPositivePairs);
    }
    let scale = inv_t / T::of(contributing as f64);
    // d loss / d cos_ij; cos is symmetric so both orientations feed each row.
    let g_cos = (&coef + &coef.t()) * scale;
    let g_u = g_cos.dot(&u);
    let mut grad = Array2::zeros(acts.dim());
    let floor = T::of(NORM_FLOOR);
    for i in 0..b {
        let gu = g_u.row(i);
        let ui = u.row(i);
        let mut gi = grad.row_mut(i);
        if norms[i] > floor {
            let radial = gu.dot(&ui);
            for ((g, &gu), &uu) in gi.iter_mut().zip(gu.iter()).zip(ui.iter()) {
                *g = (gu - radial * uu) / norms[i];
            }
        } else {
            gi.assign(&(&gu / floor));
        }
    }
    Ok(SnnlOutput {
        value: total / T::of(contributing as f64),
        grad,
        contributing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Literal double-loop evaluation, no log-sum-exp, explicit cosine.
    fn brute_force(acts: &Array2<f64>, pos: impl Fn(usize, usize) -> bool, t: f64) -> f64 {
        let b = acts.nrows();
        let cosine = |i: usize, j: usize| {
            let (mut dot, mut ni, mut nj) = (0.0, 0.0, 0.0);
            for k in 0..acts.ncols() {
                dot += acts[[i, k]] * acts[[j, k]];
                ni += acts[[i, k]] * acts[[i, k]];
                nj += acts[[j, k]] * acts[[j, k]];
            }
            dot / (ni.sqrt() * nj.sqrt())
        };
        let mut sum = 0.0;
        let mut count = 0;
        for i in 0..b {
            let (mut num, mut den) = (0.0, 0.0);
            let mut any = false;
            for j in 0..b {
                if j == i {
                    continue;
                }
                let e = (-(1.0 - cosine(i, j)) / t).exp();
                den += e;
                if pos(i, j) {
                    num += e;
                    any = true;
                }
            }
            if any {
                sum += -(num / den).ln();
                count += 1;
            }
        }
        sum / count as f64
    }

    fn lcg(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn two_same_label_points_have_zero_loss() {
        let a = array![[1.0f64, 0.2], [-0.3, 0.8]];
        let out = snnl(a.view(), &[1, 1], 1.0).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.grad.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn identical_vectors_two_classes() {
        let a = Array2::from_elem((4, 3), 0.4);
        let out = snnl(a.view(), &[0, 0, 1, 1], 1.0).unwrap();
        assert!((out.value - 3f64.ln()).abs() < 1e-12);
        assert!((out.value - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn matches_brute_force() {
        for (seed, t) in [(1u64, 0.1), (2, 1.0), (3, 10.0), (4, 0.1), (5, 1.0)] {
            let a = Array2::from_shape_vec((4, 3), lcg(seed, 12)).unwrap();
            let labels = [0usize, 1, 0, 1];
            let out = snnl(a.view(), &labels, t).unwrap();
            let expected = brute_force(&a, |i, j| labels[i] == labels[j], t);
            assert!((out.value - expected).abs() < 1e-10, "{} vs {expected}", out.value);
        }
    }

    #[test]
    fn points_without_peers_are_excluded() {
        let a = Array2::from_shape_vec((5, 2), lcg(9, 10)).unwrap();
        let labels = [0usize, 0, 1, 2, 0];
        let out = snnl(a.view(), &labels, 0.5).unwrap();
        assert_eq!(out.contributing, 3);
        let expected = brute_force(&a, |i, j| labels[i] == labels[j], 0.5);
        assert!((out.value - expected).abs() < 1e-10);
    }

    #[test]
    fn no_peers_anywhere_is_an_error() {
        let a = Array2::from_shape_vec((3, 2), lcg(2, 6)).unwrap();
        assert!(matches!(snnl(a.view(), &[0, 1, 2], 1.0), Err(Error::NoPositivePairs)));
        assert!(snnl(a.slice(ndarray::s![..1, ..]), &[0], 1.0).is_err());
        assert!(snnl(a.view(), &[0, 0, 1], 0.0).is_err());
    }

    #[test]
    fn unsupervised_duplicates_pair_up() {
        let raw = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.2], [1.0, 0.0, 0.0], [0.0, 1.0, 0.2]];
        assert_eq!(nearest_neighbors(raw.view()), vec![2, 3, 0, 1]);
    }

    #[test]
    fn unsupervised_matches_brute_force() {
        let raw = Array2::from_shape_vec((5, 4), lcg(21, 20)).unwrap();
        let acts = Array2::from_shape_vec((5, 3), lcg(22, 15)).unwrap();
        // brute-force nearest neighbour by explicit cosine distance
        let nn: Vec<usize> = (0..5)
            .map(|i| {
                let mut best = (f64::INFINITY, 0);
                for j in 0..5 {
                    if j == i {
                        continue;
                    }
                    let r = |a: usize| raw.row(a).to_owned();
                    let d = 1.0 - r(i).dot(&r(j)) / (r(i).dot(&r(i)).sqrt() * r(j).dot(&r(j)).sqrt());
                    if d < best.0 {
                        best = (d, j);
                    }
                }
                best.1
            })
            .collect();
        let out = snnl_unsupervised(acts.view(), raw.view(), 0.7).unwrap();
        let expected = brute_force(&acts, |i, j| nn[i] == j, 0.7);
        assert!((out.value - expected).abs() < 1e-10);
        assert_eq!(out.contributing, 5);
    }

    #[test]
    fn unsupervised_identical_acts() {
        let raw = Array2::from_shape_vec((6, 3), lcg(5, 18)).unwrap();
        let acts = Array2::from_elem((6, 2), 0.3);
        let out = snnl_unsupervised(acts.view(), raw.view(), 1.0).unwrap();
        assert!((out.value - 5f64.ln()).abs() < 1e-12);
        assert!(snnl_unsupervised(acts.slice(ndarray::s![..2, ..]), raw.slice(ndarray::s![..2, ..]), 1.0).is_err());
    }

    #[test]
    fn gradient_matches_central_difference() {
        let a = Array2::from_shape_vec((5, 3), lcg(17, 15)).unwrap();
        let labels = [0usize, 1, 0, 1, 1];
        for t in [0.1, 1.0, 10.0] {
            let out = snnl(a.view(), &labels, t).unwrap();
            let h = 1e-6;
            for i in 0..5 {
                for k in 0..3 {
                    let (mut up, mut dn) = (a.clone(), a.clone());
                    up[[i, k]] += h;
                    dn[[i, k]] -= h;
                    let fd = (snnl(up.view(), &labels, t).unwrap().value
                        - snnl(dn.view(), &labels, t).unwrap().value)
                        / (2.0 * h);
                    let an = out.grad[[i, k]];
                    assert!(
                        (fd - an).abs() <= 1e-6 * fd.abs().max(an.abs()).max(1e-3),
                        "T={t} ({i},{k}): fd {fd} analytic {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_row_is_handled() {
        let a = array![[0.0f64, 0.0], [1.0, 0.5], [0.2, -1.0]];
        let out = snnl(a.view(), &[0, 0, 1], 1.0).unwrap();
        assert!(out.value.is_finite());
        assert!(out.grad.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rescaling_invariance() {
        let a = Array2::from_shape_vec((6, 4), lcg(31, 24)).unwrap();
        let labels = [0usize, 1, 2, 0, 1, 2];
        let v1 = snnl(a.view(), &labels, 0.3).unwrap().value;
        let v2 = snnl((&a * 7.3).view(), &labels, 0.3).unwrap().value;
        assert!((v1 - v2).abs() < 1e-9);
    }
}
