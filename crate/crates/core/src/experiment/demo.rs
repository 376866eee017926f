//! Soft nearest neighbor loss applied directly to point coordinates: random
//! labels on Gaussian points, no network. Shows how a temperature schedule
//! changes how fast same-class points pull together.

use ndarray::Array2;
use serde::Serialize;

use crate::cluster::{nine_run_protocol, reporting_run};
use crate::dataio::random_labelled_gaussian;
use crate::error::{Error, Result};
use crate::losses::{snnl, TemperatureSchedule};
use crate::metrics::clustering_accuracy;
use crate::nn::{adam_update, AdamConfig};
use crate::rng::{derive_seed, streams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoConfig {
    pub points: usize,
    pub classes: usize,
    pub dim: usize,
    pub epochs: usize,
    /// Full-batch optimizer steps per epoch.
    pub steps_per_epoch: usize,
    pub learning_rate: f64,
    pub snapshot_every: usize,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            points: 300,
            classes: 4,
            dim: 2,
            epochs: 50,
            steps_per_epoch: 100,
            learning_rate: 0.02,
            snapshot_every: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoEpoch {
    pub epoch: usize,
    pub temperature: f64,
    /// Loss of the coordinates after `epoch` epochs, at that epoch's
    /// temperature: the value the optimizer sees.
    pub loss: f64,
    /// The same coordinates scored at `T = 1`, comparable across schedules.
    pub loss_at_unit_temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoTrace {
    pub schedule: TemperatureSchedule,
    /// Entries for epochs `0..=epochs`.
    pub epochs: Vec<DemoEpoch>,
    /// `(epoch, coordinates)` every `snapshot_every` epochs and at the end.
    pub snapshots: Vec<(usize, Array2<f64>)>,
    pub labels: Vec<usize>,
    /// k-means ACC on the final coordinates.
    pub final_acc: f64,
    /// k-means ACC on the final coordinates scaled to unit length. The loss
    /// only sees directions, so this separates optimization failures from
    /// k-means splitting a class along its radius.
    pub final_direction_acc: f64,
}

impl DemoTrace {
    pub fn final_points(&self) -> &Array2<f64> {
        &self.snapshots.last().expect("epoch 0 is always recorded").1
    }

    /// First epoch whose loss is at or below `target`.
    pub fn first_epoch_at_or_below(&self, target: f64) -> Option<usize> {
        self.epochs.iter().find(|e| e.loss <= target).map(|e| e.epoch)
    }
}

/// The shared starting point: Gaussian points with uniformly random labels.
pub fn demo_points(config: &DemoConfig) -> (Array2<f64>, Vec<usize>) {
    random_labelled_gaussian(
        config.points,
        config.dim,
        config.classes,
        derive_seed(config.seed, streams::SYNTHETIC),
    )
}

pub fn synthetic_gaussian_demo(config: &DemoConfig, schedule: &TemperatureSchedule) -> Result<DemoTrace> {
    if config.classes < 2 || config.points < config.classes {
        return Err(Error::Argument(format!(
            "demo needs points >= classes >= 2, got {} points and {} classes",
            config.points, config.classes
        )));
    }
    schedule.validate()?;
    let (mut x, labels) = demo_points(config);
    let adam = AdamConfig {
        lr: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut m = vec![0.0; x.len()];
    let mut v = vec![0.0; x.len()];
    let mut t = 0u64;
    let score = |x: &Array2<f64>, e: usize| -> Result<DemoEpoch> {
        let temperature = schedule.temperature(e);
        Ok(DemoEpoch {
            epoch: e,
            temperature,
            loss: snnl(x.view(), &labels, temperature)?.value,
            loss_at_unit_temperature: snnl(x.view(), &labels, 1.0)?.value,
        })
    };
    let mut epochs = vec![score(&x, 0)?];
    let mut snapshots = vec![(0, x.clone())];
    for e in 0..config.epochs {
        let temperature = schedule.temperature(e);
        for _ in 0..config.steps_per_epoch {
            let g = snnl(x.view(), &labels, temperature)?.grad;
            t += 1;
            adam_update(
                x.as_slice_mut().expect("owned standard layout"),
                g.as_slice().expect("owned standard layout"),
                &mut m,
                &mut v,
                t,
                &adam,
            );
        }
        epochs.push(score(&x, e + 1)?);
        if (e + 1) % config.snapshot_every.max(1) == 0 || e + 1 == config.epochs {
            snapshots.push((e + 1, x.clone()));
        }
    }
    let kmeans_acc = |p: &Array2<f64>| -> Result<f64> {
        let runs = nine_run_protocol(p.view(), config.classes, derive_seed(config.seed, streams::KMEANS))?;
        clustering_accuracy(&labels, &reporting_run(&runs).assignments)
    };
    let final_acc = kmeans_acc(&x)?;
    let mut directions = x.clone();
    for mut r in directions.rows_mut() {
        let n = r.dot(&r).sqrt();
        if n > 0.0 {
            r /= n;
        }
    }
    let final_direction_acc = kmeans_acc(&directions)?;
    Ok(DemoTrace {
        schedule: *schedule,
        epochs,
        snapshots,
        labels,
        final_acc,
        final_direction_acc,
    })
}

/// Fixed-temperature and annealing runs from the same starting points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoComparison {
    pub fixed: DemoTrace,
    pub annealing: DemoTrace,
}

impl DemoComparison {
    pub fn run(config: &DemoConfig, fixed: &TemperatureSchedule, annealing: &TemperatureSchedule) -> Result<Self> {
        Ok(DemoComparison {
            fixed: synthetic_gaussian_demo(config, fixed)?,
            annealing: synthetic_gaussian_demo(config, annealing)?,
        })
    }

    /// `epoch,temperature_fixed,loss_fixed,unit_fixed,temperature_annealing,...`
    pub fn loss_csv(&self) -> String {
        let mut s = String::from(
            "epoch,temperature_fixed,loss_fixed,loss_fixed_t1,temperature_annealing,loss_annealing,loss_annealing_t1\n",
        );
        for (a, b) in self.fixed.epochs.iter().zip(&self.annealing.epochs) {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                a.epoch,
                a.temperature,
                a.loss,
                a.loss_at_unit_temperature,
                b.temperature,
                b.loss,
                b.loss_at_unit_temperature
            ));
        }
        s
    }

    /// `schedule,epoch,x0,x1,...,label` for every snapshot of both runs.
    pub fn points_csv(&self) -> String {
        let dim = self.fixed.final_points().ncols();
        let cols: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
        let mut s = format!("schedule,epoch,{},label\n", cols.join(","));
        for (name, trace) in [("fixed", &self.fixed), ("annealing", &self.annealing)] {
            for (epoch, pts) in &trace.snapshots {
                for (row, l) in pts.rows().into_iter().zip(&trace.labels) {
                    let vals: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                    s.push_str(&format!("{name},{epoch},{},{l}\n", vals.join(",")));
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epochs_returns_the_input() {
        let cfg = DemoConfig {
            epochs: 0,
            ..DemoConfig::default()
        };
        let trace = synthetic_gaussian_demo(&cfg, &TemperatureSchedule::fixed()).unwrap();
        assert_eq!(trace.final_points(), &demo_points(&cfg).0);
        assert_eq!(trace.epochs.len(), 1);
    }

    #[test]
    fn short_run_lowers_loss() {
        let cfg = DemoConfig {
            points: 60,
            epochs: 5,
            ..DemoConfig::default()
        };
        let trace = synthetic_gaussian_demo(&cfg, &TemperatureSchedule::fixed()).unwrap();
        assert!(trace.epochs[5].loss < trace.epochs[0].loss);
        assert_eq!(trace.snapshots.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 5]);
    }

    #[test]
    fn rejects_degenerate_sizes() {
        let cfg = DemoConfig {
            classes: 1,
            ..DemoConfig::default()
        };
        assert!(synthetic_gaussian_demo(&cfg, &TemperatureSchedule::fixed()).is_err());
    }
}
