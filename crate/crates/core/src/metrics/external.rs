//! Label-agreement metrics computed from the contingency table.

use super::contingency::ContingencyTable;
use super::hungarian::max_weight_matching;
use crate::error::Result;

/// Fraction of points whose cluster maps to their true label under the best
/// one-to-one cluster-to-label mapping.
pub fn clustering_accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(truth, pred)?;
    // rows = clusters, columns = labels
    let weights: Vec<Vec<i64>> = (0..table.num_pred())
        .map(|c| (0..table.num_true()).map(|l| table.counts[l][c] as i64).collect())
        .collect();
    let (_, matched) = max_weight_matching(&weights);
    Ok(matched as f64 / table.n as f64)
}

fn entropy(marginals: &[u64], n: f64) -> f64 {
    marginals
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `2 I(y, c) / (H(y) + H(c))` with natural logarithms; 0 when both
/// partitions have a single cluster.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(truth, pred)?;
    let n = t.n as f64;
    let hy = entropy(&t.row_sums, n);
    let hc = entropy(&t.col_sums, n);
    if hy + hc == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (t.row_sums[i] as f64 * t.col_sums[j] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (hy + hc)).clamp(0.0, 1.0))
}

fn pairs(c: u64) -> i128 {
    let c = c as i128;
    c * (c - 1) / 2
}

/// Hubert-Arabie adjusted Rand index from pair counts, evaluated in exact
/// integer arithmetic up to the final division.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(truth, pred)?;
    let index: i128 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_a: i128 = t.row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_b: i128 = t.col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(t.n);
    // (index - sa*sb/total) / ((sa+sb)/2 - sa*sb/total), scaled by 2*total
    let num = 2 * (index * total - sum_a * sum_b);
    let den = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
    if den == 0 {
        // only reachable when both partitions are identical (all one
        // cluster, or all singletons)
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}
