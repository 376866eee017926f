//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use disentangle::losses::{composite_loss, LossConfig, TemperatureSchedule};
use disentangle::nn::{Autoencoder, AutoencoderSpec, LOGISTIC_CLAMP};
use disentangle::rng::rng_from_seed;
use ndarray::Array2;
use rand::Rng;

/// Five-point stencil step: truncation error ~h^4, rounding ~eps*|f|/h.
/// Five-point stencil step: truncation error ~h^4, rounding ~eps*|f|/h.
pub const FD_STEP: f64 = 1e-4;

/// Components smaller than this fraction of the loss are lost in the
/// rounding noise of the loss itself and get compared absolutely.
pub const NOISE_FLOOR: f64 = 1e-6;

/// One randomly drawn tiny network + batch + objective.
#[derive(Debug, Clone)]
pub struct GradCase {
    pub spec: AutoencoderSpec,
    pub model: Autoencoder<f64>,
    pub loss: LossConfig,
    pub x: Array2<f64>,
    pub labels: Vec<usize>,
    pub temperature: f64,
    pub seed: u64,
}

/// Objectives 0..=8: the baseline then the eight table rows.
pub fn objective(index: usize) -> LossConfig {
    if index == 0 {
        LossConfig::baseline()
    } else {
        LossConfig::table_row(index as u8).unwrap()
    }
}

/// Pins the temperature at epoch 0 to `t`: fixed schedules directly,
/// annealing ones through `eta = t^(-1/gamma)`.
pub fn with_temperature(mut loss: LossConfig, t: f64) -> LossConfig {
    if let Some(c) = loss.snnl_mut() {
        c.schedule = match c.schedule {
            TemperatureSchedule::Fixed { .. } => TemperatureSchedule::Fixed { temperature: t },
            TemperatureSchedule::Annealing { gamma, .. } => TemperatureSchedule::Annealing {
                eta: t.powf(-1.0 / gamma),
                gamma,
            },
        };
    }
    loss
}

pub fn draw_case(objective_index: usize, temperature: f64, seed: u64) -> GradCase {
    let mut rng = rng_from_seed(seed);
    let d = rng.random_range(2..=8);
    let c = rng.random_range(1..=8);
    let hidden: Vec<usize> = (0..3).map(|_| rng.random_range(2..=8)).collect();
    let loss = with_temperature(objective(objective_index), temperature);
    let unsupervised = loss.snnl().is_some_and(|s| !s.supervised);
    let b = rng.random_range(if unsupervised { 3 } else { 2 }..=8);
    let x = Array2::from_shape_simple_fn((b, d), || rng.random_range(0.05..0.95));
    let mut labels: Vec<usize> = (0..b).map(|_| rng.random_range(0..3)).collect();
    // guarantee at least one same-label pair
    labels[1] = labels[0];
    let spec = AutoencoderSpec {
        input_dim: d,
        hidden,
        latent_dim: c,
    };
    let mut model = Autoencoder::init(&spec, seed).unwrap();
    // Zero biases put every pre-activation fed by a dead layer exactly on the
    // ReLU kink, where central differences are meaningless.
    for layer in &mut model.layers {
        layer.bias.mapv_inplace(|_| rng.random_range(-0.1..0.1));
    }
    GradCase {
        spec,
        model,
        loss,
        x,
        labels,
        temperature,
        seed,
    }
}

pub fn total_loss(model: &Autoencoder<f64>, case: &GradCase) -> f64 {
    evaluate(model, case).0
}

/// Loss plus everything that decides which smooth piece the loss is on:
/// which units are active, which outputs sit on the clamp, and which layer
/// the argmin picked.
fn evaluate(model: &Autoencoder<f64>, case: &GradCase) -> (f64, Vec<(bool, bool)>, Option<usize>) {
    let trace = model.forward(case.x.view()).unwrap();
    let report = composite_loss(&case.loss, &trace, Some(&case.labels), 0)
        .unwrap()
        .report;
    let (lo, hi) = (LOGISTIC_CLAMP, 1.0 - LOGISTIC_CLAMP);
    let pattern = trace.activations[1..]
        .iter()
        .flat_map(|a| a.iter().map(move |&v| (v > 0.0, v <= lo || v >= hi)))
        .collect();
    (report.total, pattern, report.chosen_layer)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Components whose stencil straddles a ReLU kink, the logistic clamp or an
    /// argmin switch.
    pub skipped: usize,
}

/// Analytic gradient against five-point central differences, per component
/// `|a - n| / max(|a|, |n|, NOISE_FLOOR * max(1, |f|))`. A component is only
/// scored when all four stencil points stay on the same smooth piece as the
/// unperturbed model; across a kink the derivative does not exist.
pub fn check_gradient(case: &GradCase) -> GradCheck {
    let model = &case.model;
    let trace = model.forward(case.x.view()).unwrap();
    let out = composite_loss(&case.loss, &trace, Some(&case.labels), 0).unwrap();
    let floor = NOISE_FLOOR * out.report.total.abs().max(1.0);
    let analytic = model
        .backward(&trace, out.output_grad.view(), &out.layer_grads)
        .unwrap()
        .flatten();
    let (_, pattern, chosen) = evaluate(model, case);
    let h = FD_STEP;
    let mut result = GradCheck {
        max_relative_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (p, &a) in analytic.iter().enumerate() {
        let mut f = [0.0; 4];
        let mut smooth = true;
        for (slot, delta) in f.iter_mut().zip([-2.0 * h, -h, h, 2.0 * h]) {
            let mut m = model.clone();
            *m.params_mut().nth(p).unwrap() += delta;
            let (v, pat, ch) = evaluate(&m, case);
            smooth &= pat == pattern && ch == chosen;
            *slot = v;
        }
        if !smooth {
            result.skipped += 1;
            continue;
        }
        let numeric = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        result.max_relative_error = result.max_relative_error.max(err);
        result.checked += 1;
    }
    result
}
