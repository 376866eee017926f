use log::{debug, warn};
use serde::Serialize;

use crate::dataio::{epoch_batches, Dataset};
use crate::error::{Error, Result};
use crate::losses::{composite_loss, LossConfig};
use crate::nn::{AdamConfig, AdamState, Autoencoder};
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub loss: LossConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub shuffle_seed: u64,
}

/// Batch-averaged loss components for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub temperature: Option<f64>,
    pub total: f64,
    pub reconstruction: f64,
    /// Soft nearest neighbor term before the alpha weight.
    pub snnl: Option<f64>,
    /// How often each configured layer won the argmin, by trace index.
    pub chosen_layers: Vec<(usize, usize)>,
    pub batches: usize,
    /// Batches without a single same-class pair, which get no update.
    pub skipped_batches: usize,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str =
        "epoch,temperature,total,reconstruction,snnl,batches,skipped_batches,chosen_layers";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        let chosen = self
            .chosen_layers
            .iter()
            .map(|(l, n)| format!("{l}:{n}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "{},{},{:e},{:e},{},{},{},{}",
            self.epoch,
            opt(self.temperature),
            self.total,
            self.reconstruction,
            opt(self.snnl),
            self.batches,
            self.skipped_batches,
            chosen
        )
    }
}

/// Mini-batch Adam on the configured objective. `on_epoch` sees each
/// epoch's log as soon as it is complete. A non-finite loss aborts with
/// [`Error::NonFinite`].
pub fn train<T: Real>(
    model: &mut Autoencoder<T>,
    data: &Dataset<T>,
    settings: &TrainSettings,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>> {
    settings.loss.validate(model.layers.len())?;
    if settings.loss.is_supervised() && data.labels.is_none() {
        return Err(Error::Argument(format!(
            "supervised objective but dataset {} has no labels",
            data.name
        )));
    }
    if data.len() < 2 {
        return Err(Error::Argument("training needs at least two examples".into()));
    }
    let mut adam = AdamState::new(model, settings.adam);
    let mut logs = Vec::with_capacity(settings.epochs);
    for epoch in 0..settings.epochs {
        let mut sums = [0.0f64; 3];
        let mut used = 0usize;
        let mut skipped = 0usize;
        let mut temperature = None;
        let mut chosen: Vec<(usize, usize)> = settings
            .loss
            .snnl()
            .map(|c| c.layers.iter().map(|&l| (l, 0)).collect())
            .unwrap_or_default();
        let batches = epoch_batches(data, settings.batch_size, settings.shuffle_seed, epoch)?;
        let total_batches = batches.len();
        for batch in batches {
            let trace = model.forward(batch.features.view())?;
            let out = match composite_loss(&settings.loss, &trace, batch.labels.as_deref(), epoch) {
                Ok(out) => out,
                Err(Error::NoPositivePairs) => {
                    warn!("epoch {epoch}: batch without same-class pairs skipped");
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let r = &out.report;
            let total = r.total.as_f64();
            if !total.is_finite() {
                return Err(Error::NonFinite(format!("training loss diverged at epoch {epoch}")));
            }
            sums[0] += total;
            sums[1] += r.reconstruction.as_f64();
            sums[2] += r.snnl_aggregate().map_or(0.0, |v| v.as_f64());
            temperature = r.temperature;
            if let Some(l) = r.chosen_layer {
                if let Some(slot) = chosen.iter_mut().find(|(i, _)| *i == l) {
                    slot.1 += 1;
                }
            }
            let grads = model.backward(&trace, out.output_grad.view(), &out.layer_grads)?;
            adam.step(model, &grads)?;
            used += 1;
        }
        if used == 0 {
            return Err(Error::NoPositivePairs);
        }
        let n = used as f64;
        let is_snnl = settings.loss.snnl().is_some();
        let log = EpochLog {
            epoch,
            temperature,
            total: sums[0] / n,
            reconstruction: sums[1] / n,
            snnl: is_snnl.then(|| sums[2] / n),
            chosen_layers: if settings.loss.snnl().is_some_and(|c| c.layer_mode == crate::losses::LayerMode::Argmin) {
                chosen
            } else {
                Vec::new()
            },
            batches: total_batches,
            skipped_batches: skipped,
        };
        debug!(
            "epoch {epoch}: total {:.5} rec {:.5} snnl {:?}",
            log.total, log.reconstruction, log.snnl
        );
        on_epoch(&log);
        logs.push(log);
    }
    Ok(logs)
}
