use disentangle::metrics::{
    ari, calinski_harabasz, clustering_accuracy, davies_bouldin, max_weight_matching, nmi, silhouette,
};
use disentangle::rng::rng_from_seed;
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;

/// Truth labels, a prediction over `k` clusters, and 2-D points that roughly
/// follow the prediction so every cluster is non-empty and spread out.
fn labelled_points() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Array2<f64>)> {
    (2usize..5, 6usize..30).prop_flat_map(|(k, n)| {
        (
            proptest::collection::vec(0usize..4, n),
            proptest::collection::vec(0usize..k, n),
            proptest::collection::vec(-1.0f64..1.0, 2 * n),
        )
            .prop_map(move |(truth, mut pred, noise)| {
                // every predicted cluster non-empty
                for c in 0..k {
                    pred[c] = c;
                }
                let x = Array2::from_shape_fn((n, 2), |(i, j)| {
                    pred[i] as f64 * if j == 0 { 3.0 } else { -2.0 } + noise[2 * i + j]
                });
                (truth, pred, x)
            })
    })
}

fn relabel(pred: &[usize], perm: &[usize]) -> Vec<usize> {
    pred.iter().map(|&p| perm[p]).collect()
}

proptest! {
    #[test]
    fn all_six_ignore_cluster_names((truth, pred, x) in labelled_points(), seed in any::<u64>()) {
        let k = pred.iter().max().unwrap() + 1;
        let mut perm: Vec<usize> = (0..k).map(|c| c * 7 + 3).collect();
        perm.shuffle(&mut rng_from_seed(seed));
        let renamed = relabel(&pred, &perm);
        prop_assert_eq!(clustering_accuracy(&truth, &pred).unwrap(), clustering_accuracy(&truth, &renamed).unwrap());
        prop_assert_eq!(ari(&truth, &pred).unwrap(), ari(&truth, &renamed).unwrap());
        prop_assert!((nmi(&truth, &pred).unwrap() - nmi(&truth, &renamed).unwrap()).abs() < 1e-12);
        let v = x.view();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(silhouette(v, &pred).unwrap(), silhouette(v, &renamed).unwrap()));
        prop_assert!(close(calinski_harabasz(v, &pred).unwrap(), calinski_harabasz(v, &renamed).unwrap()));
        prop_assert!(close(davies_bouldin(v, &pred).unwrap(), davies_bouldin(v, &renamed).unwrap()));
    }

    #[test]
    fn scores_stay_in_range((truth, pred, x) in labelled_points()) {
        let acc = clustering_accuracy(&truth, &pred).unwrap();
        let nm = nmi(&truth, &pred).unwrap();
        let a = ari(&truth, &pred).unwrap();
        let s = silhouette(x.view(), &pred).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
        prop_assert!((0.0..=1.0).contains(&nm));
        prop_assert!((-1.0..=1.0).contains(&a));
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert!(calinski_harabasz(x.view(), &pred).unwrap() >= 0.0);
        prop_assert!(davies_bouldin(x.view(), &pred).unwrap() >= 0.0);
    }

    #[test]
    fn acc_lower_bounds((truth, pred, _) in labelled_points()) {
        // One-to-one matching can always take the single largest overlap; a
        // constant prediction scores exactly the majority fraction. (More
        // clusters than that can score below it: all-one-class truth split
        // into two clusters gives 5/6.)
        let n = truth.len() as f64;
        let mut overlap = [[0usize; 4]; 4];
        let mut counts = [0usize; 4];
        for (&t, &p) in truth.iter().zip(&pred) {
            overlap[t][p] += 1;
            counts[t] += 1;
        }
        let best_pair = *overlap.iter().flatten().max().unwrap() as f64 / n;
        let majority = *counts.iter().max().unwrap() as f64 / n;
        prop_assert!(clustering_accuracy(&truth, &pred).unwrap() >= best_pair - 1e-15);
        prop_assert_eq!(clustering_accuracy(&truth, &vec![9; truth.len()]).unwrap(), majority);
    }

    #[test]
    fn hungarian_matches_enumeration(
        weights in (1usize..=6).prop_flat_map(|k| proptest::collection::vec(proptest::collection::vec(0i64..50, k), k))
    ) {
        let k = weights.len();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = i64::MIN;
        permutations(&mut perm, 0, &mut |p| {
            best = best.max(p.iter().enumerate().map(|(i, &j)| weights[i][j]).sum());
        });
        prop_assert_eq!(max_weight_matching(&weights).1, best);
    }
}

fn permutations(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, visit);
        p.swap(start, i);
    }
}

#[test]
fn ari_of_shuffled_predictions_centres_on_zero() {
    let mut rng = rng_from_seed(11);
    let truth: Vec<usize> = (0..100).map(|i| i % 4).collect();
    let mut pred: Vec<usize> = (0..100).map(|i| (i / 7) % 5).collect();
    let mut total = 0.0;
    for _ in 0..1000 {
        pred.shuffle(&mut rng);
        total += ari(&truth, &pred).unwrap();
    }
    let mean = total / 1000.0;
    assert!(mean.abs() < 0.02, "mean ARI {mean}");
}
