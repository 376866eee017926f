use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::{DatasetKind, ExperimentConfig, ModelKind, Precision};
use super::train::{train, EpochLog, TrainSettings};
use crate::cluster::{nine_run_protocol, pca_fit, reporting_run};
use crate::dataio::{
    gaussian_blobs, read_labelled_csv, sample_labelled_subset, write_labelled_csv, Dataset, Split,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricScores, MetricsReport, SilhouetteSampling};
use crate::nn::{Autoencoder, Checkpoint};
use crate::rng::{derive_seed, streams};
use crate::Real;

/// Environment variable naming the dataset root directory.
pub const DATA_DIR_ENV: &str = "DISENTANGLE_DATA_DIR";

/// `config.data_dir`, else `$DISENTANGLE_DATA_DIR`, else `./data`.
pub fn resolve_data_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn csv_dataset<T: Real>(path: &Path, name: &str) -> Result<Dataset<T>> {
    let (x, labels) = read_labelled_csv(path)?;
    let k = labels.as_ref().and_then(|l| l.iter().max()).map_or(0, |m| m + 1);
    Dataset::new(x.mapv(T::of), labels, name, k)
}

/// Training and test splits for the configured dataset. Synthetic data is
/// drawn once per experiment from the first seed.
pub fn load_datasets<T: Real>(config: &ExperimentConfig) -> Result<(Dataset<T>, Dataset<T>)> {
    let (train, mut test) = match config.dataset {
        DatasetKind::SyntheticGaussian => {
            let seed = derive_seed(config.seeds[0], streams::SYNTHETIC);
            let n = config.synthetic_train_samples + config.synthetic_test_samples;
            let all = gaussian_blobs::<T>(
                n,
                config.synthetic_dim,
                config.synthetic_classes,
                config.synthetic_spread,
                seed,
            )?;
            let idx: Vec<usize> = (0..n).collect();
            let (a, b) = idx.split_at(config.synthetic_train_samples);
            let mut train = all.select(a);
            let mut test = all.select(b);
            train.name = "synthetic-gaussian-train".into();
            test.name = "synthetic-gaussian-test".into();
            (train, test)
        }
        DatasetKind::Csv => {
            let train = csv_dataset(config.train_csv.as_deref().unwrap(), "csv-train")?;
            let mut test: Dataset<T> = csv_dataset(config.test_csv.as_deref().unwrap(), "csv-test")?;
            test.num_classes = test.num_classes.max(train.num_classes);
            (train, test)
        }
        kind => {
            let root = resolve_data_dir(config);
            let bench = kind.benchmark().unwrap();
            (bench.load(&root, Split::Train)?, bench.load(&root, Split::Test)?)
        }
    };
    if let Some(limit) = config.test_limit {
        if limit < test.len() {
            let idx: Vec<usize> = (0..limit).collect();
            test = test.select(&idx);
        }
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SeedStatus {
    Ok { scores: MetricScores },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    #[serde(flatten)]
    pub status: SeedStatus,
    pub training_examples: usize,
    pub final_loss: Option<f64>,
    /// Iterations actually run by each of the nine k-means runs.
    pub kmeans_iterations: Vec<usize>,
    /// Relative to the output directory.
    pub checkpoint: Option<PathBuf>,
    /// Relative to the output directory.
    pub embeddings: Option<PathBuf>,
}

/// Everything an experiment produced. Wall-clock times are kept out of the
/// serialized record so identical runs give identical `report.json` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedRecord>,
    /// Aggregate over the seeds that succeeded; `None` if all failed.
    pub report: Option<MetricsReport>,
    #[serde(skip)]
    pub wall_clock_seconds: Vec<f64>,
}

impl RunRecord {
    pub fn succeeded(&self) -> impl Iterator<Item = &MetricScores> {
        self.seeds.iter().filter_map(|s| match &s.status {
            SeedStatus::Ok { scores } => Some(scores),
            SeedStatus::Failed { .. } => None,
        })
    }

    pub fn csv_header() -> String {
        format!("dataset,model,runs,{}", MetricsReport::csv_header())
    }

    pub fn csv_row(&self) -> Option<String> {
        let report = self.report.as_ref()?;
        Some(format!(
            "{},{},{},{}",
            self.config.dataset,
            self.config.model,
            report.per_run.len(),
            report.csv_row()
        ))
    }
}

/// Per-seed artefacts kept in memory for callers that want them.
#[derive(Debug, Clone)]
pub struct SeedOutput<T> {
    pub codes: Array2<T>,
    pub assignments: Vec<usize>,
    pub model: Option<Autoencoder<T>>,
    pub log: Vec<EpochLog>,
    pub training_examples: usize,
    pub kmeans_iterations: Vec<usize>,
    pub scores: MetricScores,
}

fn clusters(config: &ExperimentConfig, test: &Dataset<impl Real>) -> usize {
    config.k.unwrap_or(test.num_classes)
}

/// The labelled subset for `seed`, or the whole training split.
pub fn training_set<T: Real>(config: &ExperimentConfig, train_full: &Dataset<T>, seed: u64) -> Result<Dataset<T>> {
    match config.labelled_subset_size {
        Some(n) => sample_labelled_subset(train_full, n, derive_seed(seed, streams::SUBSET)),
        None => Ok(train_full.clone()),
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub model: Autoencoder<T>,
    pub log: Vec<EpochLog>,
    pub training_examples: usize,
}

/// Initializes and trains the configured autoencoder for one seed.
pub fn train_seed<T: Real>(config: &ExperimentConfig, train_full: &Dataset<T>, seed: u64) -> Result<TrainedModel<T>> {
    let loss = config
        .loss_config()?
        .ok_or_else(|| Error::Argument(format!("model {} has nothing to train", config.model)))?;
    let train_ds = training_set(config, train_full, seed)?;
    let mut model = Autoencoder::init(&config.network_spec(train_ds.dim()), derive_seed(seed, streams::INIT))?;
    let settings = TrainSettings {
        loss,
        epochs: config.epochs,
        batch_size: config.batch_size,
        adam: config.adam(),
        shuffle_seed: derive_seed(seed, streams::SHUFFLE),
    };
    let log = train(&mut model, &train_ds, &settings, |l| {
        info!(
            "seed {seed} epoch {}/{}: loss {:.5} (rec {:.5}, snnl {})",
            l.epoch + 1,
            config.epochs,
            l.total,
            l.reconstruction,
            l.snnl.map_or("-".into(), |v| format!("{v:.5}"))
        )
    })?;
    Ok(TrainedModel {
        model,
        log,
        training_examples: train_ds.len(),
    })
}

/// Train (or fit PCA) for one seed, encode the test set, run the nine-run
/// k-means protocol and score the ninth run.
pub fn run_seed<T: Real>(
    config: &ExperimentConfig,
    train_full: &Dataset<T>,
    test: &Dataset<T>,
    seed: u64,
) -> Result<SeedOutput<T>> {
    let truth = test
        .labels
        .as_deref()
        .ok_or_else(|| Error::Argument(format!("test set {} has no labels to score against", test.name)))?;
    let (codes, model, log, training_examples) = match config.model {
        ModelKind::OriginalPca => {
            let train_ds = training_set(config, train_full, seed)?;
            let proj = pca_fit(train_ds.features.view(), config.latent_dim)?;
            (proj.transform(test.features.view())?, None, Vec::new(), train_ds.len())
        }
        _ => {
            let t = train_seed(config, train_full, seed)?;
            let codes = t.model.encode(test.features.view(), 1024)?;
            (codes, Some(t.model), t.log, t.training_examples)
        }
    };
    if !codes.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("latent codes".into()));
    }
    let k = clusters(config, test);
    let runs = nine_run_protocol(codes.view(), k, derive_seed(seed, streams::KMEANS))?;
    let kmeans_iterations = runs.iter().map(|r| r.iterations_run).collect();
    let chosen = reporting_run(&runs);
    let sampling = SilhouetteSampling {
        full_limit: config.silhouette_full_limit,
        sample_size: config.silhouette_sample_size,
        seed: derive_seed(seed, streams::SILHOUETTE),
    };
    let scores = evaluate(codes.view(), truth, &chosen.assignments, &sampling)?;
    info!(
        "seed {seed}: acc {:.4} nmi {:.4} ari {:.4}",
        scores.acc, scores.nmi, scores.ari
    );
    Ok(SeedOutput {
        assignments: chosen.assignments.clone(),
        codes,
        model,
        log,
        training_examples,
        kmeans_iterations,
        scores,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Runs every seed and aggregates. With `output_dir` set, writes
/// `config.txt`, `report.json`, `report.csv`, `loss_trace.csv`,
/// `timing.json` and, per seed, `seed-<s>/embeddings.csv`,
/// `seed-<s>/clusters.csv` and `seed-<s>/model.ckpt`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    match config.precision {
        Precision::F64 => run_typed::<f64>(config),
        Precision::F32 => run_typed::<f32>(config),
    }
}

fn run_typed<T: Real>(config: &ExperimentConfig) -> Result<RunRecord> {
    let (train_full, test) = load_datasets::<T>(config)?;
    info!(
        "{} on {}: {} training / {} test examples, {} seed(s)",
        config.model,
        config.dataset,
        config.labelled_subset_size.unwrap_or(train_full.len()),
        test.len(),
        config.repeats()
    );
    let out = config.output_dir.as_deref();
    if let Some(dir) = out {
        create_dir(dir)?;
        write_text(&dir.join("config.txt"), &config.to_pairs_text())?;
    }
    let mut trace = format!("seed,{}\n", EpochLog::CSV_HEADER);
    let mut seeds = Vec::new();
    let mut timing = Vec::new();
    for &seed in &config.seeds {
        let started = Instant::now();
        let result = run_seed(config, &train_full, &test, seed);
        timing.push(started.elapsed().as_secs_f64());
        let record = match result {
            Ok(o) => {
                for l in &o.log {
                    trace.push_str(&format!("{seed},{}\n", l.csv_row()));
                }
                let (mut checkpoint, mut embeddings) = (None, None);
                if let Some(dir) = out {
                    let rel = PathBuf::from(format!("seed-{seed}"));
                    create_dir(&dir.join(&rel))?;
                    let emb = rel.join("embeddings.csv");
                    write_labelled_csv(&dir.join(&emb), "z", o.codes.view(), test.labels.as_deref())?;
                    write_clusters(&dir.join(rel.join("clusters.csv")), &o.assignments)?;
                    embeddings = Some(emb);
                    if let Some(model) = o.model {
                        let ck = rel.join("model.ckpt");
                        Checkpoint {
                            model,
                            seed,
                            epoch: config.epochs,
                        }
                        .save(&dir.join(&ck))?;
                        checkpoint = Some(ck);
                    }
                }
                SeedRecord {
                    seed,
                    status: SeedStatus::Ok { scores: o.scores },
                    training_examples: o.training_examples,
                    final_loss: o.log.last().map(|l| l.total),
                    kmeans_iterations: o.kmeans_iterations,
                    checkpoint,
                    embeddings,
                }
            }
            // A diverged or degenerate seed is recorded; bad input aborts.
            Err(e @ (Error::NonFinite(_) | Error::NoPositivePairs | Error::UndefinedMetric(_))) => {
                warn!("seed {seed} failed: {e}");
                SeedRecord {
                    seed,
                    status: SeedStatus::Failed { reason: e.to_string() },
                    training_examples: 0,
                    final_loss: None,
                    kmeans_iterations: Vec::new(),
                    checkpoint: None,
                    embeddings: None,
                }
            }
            Err(e) => return Err(e),
        };
        seeds.push(record);
    }
    let ok: Vec<MetricScores> = seeds
        .iter()
        .filter_map(|s| match &s.status {
            SeedStatus::Ok { scores } => Some(*scores),
            SeedStatus::Failed { .. } => None,
        })
        .collect();
    let report = if ok.is_empty() { None } else { Some(MetricsReport::from_runs(ok)?) };
    let record = RunRecord {
        config: config.clone(),
        seeds,
        report,
        wall_clock_seconds: timing,
    };
    if let Some(dir) = out {
        write_outputs(dir, &record, &trace)?;
    }
    Ok(record)
}

fn write_clusters(path: &Path, assignments: &[usize]) -> Result<()> {
    let mut s = String::from("cluster\n");
    for a in assignments {
        s.push_str(&format!("{a}\n"));
    }
    write_text(path, &s)
}

fn write_outputs(dir: &Path, record: &RunRecord, trace: &str) -> Result<()> {
    write_text(&dir.join("report.json"), &serde_json::to_string_pretty(record)?)?;
    let mut csv = RunRecord::csv_header() + "\n";
    if let Some(row) = record.csv_row() {
        csv.push_str(&row);
        csv.push('\n');
    }
    write_text(&dir.join("report.csv"), &csv)?;
    write_text(&dir.join("loss_trace.csv"), trace)?;
    write_text(
        &dir.join("timing.json"),
        &serde_json::to_string_pretty(&serde_json::json!({
            "seeds": record.config.seeds,
            "wall_clock_seconds": record.wall_clock_seconds,
        }))?,
    )
}

/// One row of a few-labels sweep: ACC and NMI (average and best over seeds)
/// at one labelled-subset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub acc_avg: f64,
    pub acc_best: f64,
    pub nmi_avg: f64,
    pub nmi_best: f64,
    pub failed_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub records: Vec<RunRecord>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("size,acc_avg,acc_best,nmi_avg,nmi_best,failed_seeds\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{:.4},{}\n",
                r.size, r.acc_avg, r.acc_best, r.nmi_avg, r.nmi_best, r.failed_seeds
            ));
        }
        s
    }
}

/// One experiment per labelled-subset size, each over all configured seeds.
/// Per-size outputs go to `output_dir/size-<n>/`, the table to
/// `output_dir/sweep.csv`.
pub fn few_labels_sweep(base: &ExperimentConfig, sizes: &[usize]) -> Result<SweepTable> {
    if sizes.is_empty() {
        return Err(Error::Argument("sweep needs at least one subset size".into()));
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &size in sizes {
        let mut cfg = base.clone();
        cfg.labelled_subset_size = Some(size);
        cfg.output_dir = base.output_dir.as_ref().map(|d| d.join(format!("size-{size}")));
        let rec = run_experiment(&cfg)?;
        let report = rec.report.as_ref().ok_or_else(|| {
            Error::NonFinite(format!("every seed failed at subset size {size}"))
        })?;
        rows.push(SweepRow {
            size,
            acc_avg: report.average.acc,
            acc_best: report.best.acc,
            nmi_avg: report.average.nmi,
            nmi_best: report.best.nmi,
            failed_seeds: rec.seeds.len() - report.per_run.len(),
        });
        records.push(rec);
    }
    let table = SweepTable { rows, records };
    if let Some(dir) = &base.output_dir {
        create_dir(dir)?;
        write_text(&dir.join("sweep.csv"), &table.to_csv())?;
    }
    Ok(table)
}

/// Writes the latent codes of `data` under `checkpoint` as CSV with header
/// `z0..z{c-1},label`.
pub fn export_embeddings<T: Real>(checkpoint: &Checkpoint<T>, data: &Dataset<T>, path: &Path) -> Result<()> {
    let model = &checkpoint.model;
    if data.dim() != model.input_dim() {
        return Err(Error::Argument(format!(
            "checkpoint expects {}-dimensional input, dataset {} has {}",
            model.input_dim(),
            data.name,
            data.dim()
        )));
    }
    let codes = if data.is_empty() {
        Array2::zeros((0, model.latent_dim()))
    } else {
        model.encode(data.features.view(), 1024)?
    };
    write_labelled_csv(path, "z", codes.view(), data.labels.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(model: &str) -> ExperimentConfig {
        ExperimentConfig::from_pairs([
            ("dataset", "synthetic-gaussian"),
            ("model", model),
            ("hidden", "16, 8"),
            ("latent_dim", "3"),
            ("snnl_layers", "1, 2, 3"),
            ("epochs", "3"),
            ("batch_size", "32"),
            ("seeds", "1, 2"),
            ("synthetic_train_samples", "128"),
            ("synthetic_test_samples", "64"),
            ("synthetic_dim", "6"),
            ("synthetic_classes", "3"),
        ])
        .unwrap()
    }

    #[test]
    fn pca_and_autoencoder_runs_produce_reports() {
        for model in ["original-pca", "baseline-ae", "snnl-5", "snnl-4"] {
            let rec = run_experiment(&tiny(model)).unwrap();
            let report = rec.report.as_ref().unwrap();
            assert_eq!(report.per_run.len(), 2, "{model}");
            assert!(report.best.acc >= report.average.acc);
            assert!(report.best.dbi <= report.average.dbi);
            assert_eq!(rec.seeds[0].kmeans_iterations.len(), 9);
        }
    }

    #[test]
    fn subset_limits_training_examples() {
        let mut c = tiny("baseline-ae");
        c.labelled_subset_size = Some(40);
        let rec = run_experiment(&c).unwrap();
        assert!(rec.seeds.iter().all(|s| s.training_examples == 40));
        c.labelled_subset_size = Some(10_000);
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn outputs_are_written_and_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny("snnl-6");
        c.output_dir = Some(dir.path().to_path_buf());
        let files = ["report.json", "report.csv", "loss_trace.csv", "seed-1/embeddings.csv", "seed-2/model.ckpt"];
        let read_all = || files.map(|f| fs::read(dir.path().join(f)).unwrap());
        run_experiment(&c).unwrap();
        let first = read_all();
        run_experiment(&c).unwrap();
        assert_eq!(read_all(), first);
        let trace = fs::read_to_string(dir.path().join("loss_trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 1 + 2 * 3);
        let json: RunRecord =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json.seeds[0].embeddings.as_deref(), Some(Path::new("seed-1/embeddings.csv")));
    }

    #[test]
    fn export_checks_dimensions_and_handles_empty() {
        let c = tiny("baseline-ae");
        let (train_ds, _) = load_datasets::<f64>(&c).unwrap();
        let model = Autoencoder::init(&c.network_spec(6), 0).unwrap();
        let ck = Checkpoint { model, seed: 0, epoch: 0 };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let empty = train_ds.select(&[]);
        export_embeddings(&ck, &empty, &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "z0,z1,z2,label\n");
        export_embeddings(&ck, &train_ds, &p).unwrap();
        let first = fs::read(&p).unwrap();
        export_embeddings(&ck, &train_ds, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        assert_eq!(String::from_utf8(first).unwrap().lines().count(), 129);
        let wide = Dataset::new(Array2::<f64>::zeros((2, 7)), None, "wide", 0).unwrap();
        assert!(matches!(export_embeddings(&ck, &wide, &p), Err(Error::Argument(_))));
    }

    #[test]
    fn sweep_rows_follow_sizes() {
        let mut c = tiny("baseline-ae");
        c.seeds = vec![4];
        let t = few_labels_sweep(&c, &[32, 64]).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.size).collect::<Vec<_>>(), vec![32, 64]);
        assert_eq!(t.to_csv().lines().count(), 3);
    }
}
