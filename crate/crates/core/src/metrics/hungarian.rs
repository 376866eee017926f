//! Maximum-weight perfect matching on a (padded) square matrix, O(n^3)
//! Hungarian method with row/column potentials.

/// Returns, for each row, the matched column, and the total weight. The
/// matrix may be rectangular; it is padded with zero-weight rows/columns and
/// rows matched to padding columns map to `None`.
pub fn max_weight_matching(weights: &[Vec<i64>]) -> (Vec<Option<usize>>, i64) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    let n = rows.max(cols);
    if n == 0 {
        return (Vec::new(), 0);
    }
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            -weights[i][j]
        } else {
            0
        }
    };
    // 1-based arrays; p[j] = row matched to column j
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![None; rows];
    let mut total = 0;
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            row_to_col[i - 1] = Some(j - 1);
            total += weights[i - 1][j - 1];
        }
    }
    (row_to_col, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(w: &[Vec<i64>]) -> i64 {
        fn rec(w: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == w.len() {
                return 0;
            }
            let mut best = rec(w, row + 1, used); // row unmatched
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[row][j] + rec(w, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let cols = w.first().map_or(0, |r| r.len());
        rec(w, 0, &mut vec![false; cols])
    }

    #[test]
    fn small_square() {
        let w = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let (m, total) = max_weight_matching(&w);
        assert_eq!(total, 11);
        assert_eq!(m, vec![Some(0), Some(2), Some(1)]);
    }

    #[test]
    fn rectangular_matches_brute_force() {
        let mut s = 99u64;
        for trial in 0..200 {
            let rows = 1 + trial % 5;
            let cols = 1 + (trial / 5) % 5;
            let w: Vec<Vec<i64>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| {
                            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                            ((s >> 33) % 20) as i64
                        })
                        .collect()
                })
                .collect();
            let (m, total) = max_weight_matching(&w);
            assert_eq!(total, brute(&w), "{w:?}");
            let mut seen = std::collections::HashSet::new();
            for c in m.iter().flatten() {
                assert!(seen.insert(*c));
            }
        }
    }

    #[test]
    fn empty() {
        assert_eq!(max_weight_matching(&[]), (vec![], 0));
    }
}
