use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::Real;

/// Mean binary cross-entropy over all `b*d` entries and its gradient with
/// respect to `r`. `r` must already be clamped away from 0 and 1.
pub fn bce_loss<T: Real>(x: ArrayView2<T>, r: ArrayView2<T>) -> Result<(T, Array2<T>)> {
    if x.dim() != r.dim() {
        return Err(Error::shape("bce_loss", x.dim(), r.dim()));
    }
    let n = T::of(x.len().max(1) as f64);
    let one = T::one();
    let mut total = T::zero();
    let mut grad = Array2::zeros(r.dim());
    Zip::from(&mut grad).and(x).and(r).for_each(|g, &x, &r| {
        total = total - (x * r.ln() + (one - x) * (one - r).ln());
        *g = (r - x) / (r * (one - r)) / n;
    });
    Ok((total / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn half_everywhere_is_ln2() {
        let x = Array2::from_elem((2, 3), 0.5);
        let (l, g) = bce_loss(x.view(), x.view()).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn target_one_pushes_r_up() {
        let x = Array2::from_elem((1, 2), 1.0);
        let r = Array2::from_elem((1, 2), 0.5);
        let (l, g) = bce_loss(x.view(), r.view()).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(g.iter().all(|&v| v < 0.0));
    }

    #[test]
    fn matches_elementwise_sum() {
        let x = array![[0.0, 0.3, 1.0], [0.7, 0.2, 0.9], [0.5, 1.0, 0.0]];
        let r = array![[0.1, 0.4, 0.8], [0.6, 0.25, 0.95], [0.5, 0.3, 0.2]];
        let mut expected = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let (xv, rv): (f64, f64) = (x[[i, j]], r[[i, j]]);
                expected += -(xv * rv.ln() + (1.0 - xv) * (1.0 - rv).ln());
            }
        }
        expected /= 9.0;
        let (l, _) = bce_loss(x.view(), r.view()).unwrap();
        assert!((l - expected).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let x = array![[0.0f64, 0.3], [0.7, 1.0]];
        let r = array![[0.1, 0.4], [0.6, 0.95]];
        let (_, g) = bce_loss(x.view(), r.view()).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..2 {
                let (mut up, mut dn) = (r.clone(), r.clone());
                up[[i, j]] += h;
                dn[[i, j]] -= h;
                let fd = (bce_loss(x.view(), up.view()).unwrap().0
                    - bce_loss(x.view(), dn.view()).unwrap().0)
                    / (2.0 * h);
                assert!((fd - g[[i, j]]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = Array2::<f64>::zeros((2, 2));
        let b = Array2::<f64>::zeros((2, 3));
        assert!(bce_loss(a.view(), b.view()).is_err());
    }
}
