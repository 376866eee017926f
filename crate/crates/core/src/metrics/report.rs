//! Per-run score bundles and their average/best aggregation.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::external::{ari, clustering_accuracy, nmi};
use super::internal::{calinski_harabasz, davies_bouldin, silhouette_sampled, SilhouetteSampling};
use crate::error::{Error, Result};
use crate::Real;

/// JSON has no infinities; the sentinel values of CHS/DBI are written as the
/// strings `"inf"`, `"-inf"` and `"nan"` and read back losslessly.
mod lenient_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub sil: f64,
    #[serde(with = "lenient_f64")]
    pub chs: f64,
    #[serde(with = "lenient_f64")]
    pub dbi: f64,
    /// Seed of the silhouette subsample, if one was drawn.
    pub sil_sample_seed: Option<u64>,
}

pub const METRIC_NAMES: [&str; 6] = ["acc", "nmi", "ari", "sil", "chs", "dbi"];

impl MetricScores {
    pub fn values(&self) -> [f64; 6] {
        [self.acc, self.nmi, self.ari, self.sil, self.chs, self.dbi]
    }
}

/// Scores one partition of `points` against `truth`.
pub fn evaluate<T: Real>(
    points: ArrayView2<T>,
    truth: &[usize],
    pred: &[usize],
    sampling: &SilhouetteSampling,
) -> Result<MetricScores> {
    let sil = silhouette_sampled(points, pred, sampling)?;
    Ok(MetricScores {
        acc: clustering_accuracy(truth, pred)?,
        nmi: nmi(truth, pred)?,
        ari: ari(truth, pred)?,
        sil: sil.value,
        chs: calinski_harabasz(points, pred)?,
        dbi: davies_bouldin(points, pred)?,
        sil_sample_seed: sil.sample_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_run: Vec<MetricScores>,
    pub average: MetricScores,
    /// Maximum of every score except DBI, which takes the minimum.
    pub best: MetricScores,
}

impl MetricsReport {
    pub fn from_runs(per_run: Vec<MetricScores>) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::Argument("cannot aggregate zero runs".into()));
        }
        let n = per_run.len() as f64;
        let mean = |f: fn(&MetricScores) -> f64| per_run.iter().map(f).sum::<f64>() / n;
        let max = |f: fn(&MetricScores) -> f64| per_run.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let sampled = per_run.iter().find_map(|r| r.sil_sample_seed);
        let average = MetricScores {
            acc: mean(|r| r.acc),
            nmi: mean(|r| r.nmi),
            ari: mean(|r| r.ari),
            sil: mean(|r| r.sil),
            chs: mean(|r| r.chs),
            dbi: mean(|r| r.dbi),
            sil_sample_seed: sampled,
        };
        let best = MetricScores {
            acc: max(|r| r.acc),
            nmi: max(|r| r.nmi),
            ari: max(|r| r.ari),
            sil: max(|r| r.sil),
            chs: max(|r| r.chs),
            dbi: per_run.iter().map(|r| r.dbi).fold(f64::INFINITY, f64::min),
            sil_sample_seed: sampled,
        };
        Ok(MetricsReport { per_run, average, best })
    }

    /// `acc_avg,acc_best,nmi_avg,...,dbi_best`.
    pub fn csv_header() -> String {
        METRIC_NAMES
            .iter()
            .flat_map(|m| [format!("{m}_avg"), format!("{m}_best")])
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn csv_row(&self) -> String {
        self.average
            .values()
            .iter()
            .zip(self.best.values())
            .flat_map(|(a, b)| [format!("{a:.4}"), format!("{b:.4}")])
            .collect::<Vec<_>>()
            .join(",")
    }
}
