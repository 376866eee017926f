use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Co-occurrence counts of true classes (rows) and predicted clusters
/// (columns). Ids are compacted to `0..K` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

/// Maps arbitrary ids onto `0..K` preserving order.
pub fn compact_ids(ids: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    for &id in ids {
        map.entry(id).or_insert(0usize);
    }
    for (k, v) in map.values_mut().enumerate() {
        *v = k;
    }
    let k = map.len();
    (ids.iter().map(|id| map[id]).collect(), k)
}

impl ContingencyTable {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Argument(format!(
                "{} true labels but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::Argument("clustering metrics need at least one point".into()));
        }
        let (t, kt) = compact_ids(truth);
        let (p, kp) = compact_ids(pred);
        let mut counts = vec![vec![0u64; kp]; kt];
        for (&a, &b) in t.iter().zip(&p) {
            counts[a][b] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..kp).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(ContingencyTable {
            counts,
            row_sums,
            col_sums,
            n: truth.len() as u64,
        })
    }

    pub fn num_true(&self) -> usize {
        self.row_sums.len()
    }

    pub fn num_pred(&self) -> usize {
        self.col_sums.len()
    }
}
