use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use disentangle::cluster::{nine_run_protocol, reporting_run};
use disentangle::dataio::{read_binary_matrix, read_labelled_csv, write_labelled_csv};
use disentangle::experiment::{
    export_embeddings, few_labels_sweep, load_datasets, parse_pairs, run_experiment, train_seed,
    DemoComparison, DemoConfig, ExperimentConfig, RunRecord, DATA_DIR_ENV,
};
use disentangle::losses::TemperatureSchedule;
use disentangle::metrics::{evaluate, SilhouetteSampling};
use disentangle::nn::Checkpoint;

#[derive(Parser)]
#[command(name = "disentangle", version, about = "Autoencoder + soft nearest neighbor loss clustering experiments")]
struct Cli {
    /// Dataset root containing mnist/, fashion-mnist/ and emnist/.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one autoencoder and save its checkpoint and loss trace.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed to train with (default: the first configured seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Checkpoint path (default: <output_dir>/model.ckpt).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Nine-run k-means on an embedding file (CSV or binary matrix).
    Cluster {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for clusters.csv and centroids.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a clustering of a labelled embedding CSV.
    Evaluate {
        /// CSV with a label column, as written by `export`.
        #[arg(long)]
        embeddings: PathBuf,
        /// clusters.csv as written by `cluster`.
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Full protocol over all seeds; writes report.json, report.csv, loss_trace.csv.
    Experiment {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Repeat the experiment for several labelled-subset sizes.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated subset sizes.
        #[arg(long, value_delimiter = ',', default_value = "1000,3000,6000")]
        sizes: Vec<usize>,
    },
    /// Soft nearest neighbor loss on random Gaussian points, fixed vs annealing temperature.
    Demo {
        #[arg(long, default_value_t = 300)]
        points: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long)]
        steps_per_epoch: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 0.55)]
        gamma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Latent codes of a dataset split under a checkpoint, as CSV.
    Export {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_parser = ["train", "test"], default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Experiment settings: a `key = value` file, then these flags, then `--set`.
#[derive(Args)]
struct ConfigArgs {
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    labelled_subset_size: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    fixed_temperature: Option<f64>,
    /// Comma-separated layer indices.
    #[arg(long)]
    snnl_layers: Option<String>,
    #[arg(short)]
    k: Option<usize>,
    /// Comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Any other config key, as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self, data_dir: Option<&Path>) -> Result<ExperimentConfig> {
        let mut pairs = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_pairs(&text)?
            }
            None => Vec::new(),
        };
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        let s = |v: &Option<_>| v.as_ref().map(|x: &String| x.clone());
        let n = |v: Option<usize>| v.map(|x| x.to_string());
        let f = |v: Option<f64>| v.map(|x| x.to_string());
        let p = |v: &Option<PathBuf>| v.as_ref().map(|x| x.display().to_string());
        put("data_dir", data_dir.map(|d| d.display().to_string()));
        put("dataset", s(&self.dataset));
        put("model", s(&self.model));
        put("labelled_subset_size", n(self.labelled_subset_size));
        put("latent_dim", n(self.latent_dim));
        put("epochs", n(self.epochs));
        put("batch_size", n(self.batch_size));
        put("learning_rate", f(self.learning_rate));
        put("alpha", f(self.alpha));
        put("eta", f(self.eta));
        put("gamma", f(self.gamma));
        put("fixed_temperature", f(self.fixed_temperature));
        put("snnl_layers", s(&self.snnl_layers));
        put("k", n(self.k));
        put("seeds", s(&self.seeds));
        put("repeats", n(self.repeats));
        put("output_dir", p(&self.output_dir));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(ExperimentConfig::from_pairs(pairs)?)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let data_dir = cli.data_dir.as_deref();
    match cli.command {
        Command::Train { config, seed, checkpoint } => {
            let cfg = config.resolve(data_dir)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir)?;
            let (train, _) = load_datasets::<f64>(&cfg)?;
            let trained = train_seed(&cfg, &train, seed)?;
            let path = checkpoint.unwrap_or_else(|| dir.join("model.ckpt"));
            Checkpoint {
                model: trained.model,
                seed,
                epoch: cfg.epochs,
            }
            .save(&path)?;
            let mut trace = format!("{}\n", disentangle::experiment::EpochLog::CSV_HEADER);
            for l in &trained.log {
                trace.push_str(&l.csv_row());
                trace.push('\n');
            }
            fs::write(dir.join("loss_trace.csv"), trace)?;
            info!("checkpoint written to {}", path.display());
        }
        Command::Cluster { embeddings, k, seed, out } => {
            let points = read_embeddings(&embeddings)?;
            let runs = nine_run_protocol(points.view(), k, seed)?;
            for (r, run) in runs.iter().enumerate() {
                info!(
                    "run {}: {} iterations, inertia {:.6}{}",
                    r + 1,
                    run.iterations_run,
                    run.inertia,
                    if run.converged { "" } else { " (not converged)" }
                );
            }
            let chosen = reporting_run(&runs);
            fs::create_dir_all(&out)?;
            let mut s = String::from("cluster\n");
            for a in &chosen.assignments {
                s.push_str(&format!("{a}\n"));
            }
            fs::write(out.join("clusters.csv"), s)?;
            write_labelled_csv(&out.join("centroids.csv"), "c", chosen.centroids.view(), None)?;
            println!("inertia {}", chosen.inertia);
        }
        Command::Evaluate { embeddings, clusters, seed } => {
            let (points, labels) = read_labelled_csv(&embeddings)?;
            let labels = labels.context("embedding CSV has no labels to evaluate against")?;
            let text = fs::read_to_string(&clusters).with_context(|| format!("reading {}", clusters.display()))?;
            let pred = text
                .lines()
                .skip(1)
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .context("clusters file must hold one integer per line after the header")?;
            let sampling = SilhouetteSampling {
                seed,
                ..SilhouetteSampling::default()
            };
            let scores = evaluate(points.view(), &labels, &pred, &sampling)?;
            println!("{}", serde_json::to_string_pretty(&scores)?);
        }
        Command::Experiment { config } => {
            let cfg = config.resolve(data_dir)?;
            let record = run_experiment(&cfg)?;
            print_record(&record);
        }
        Command::Sweep { config, sizes } => {
            let cfg = config.resolve(data_dir)?;
            let table = few_labels_sweep(&cfg, &sizes)?;
            print!("{}", table.to_csv());
        }
        Command::Demo {
            points,
            classes,
            epochs,
            steps_per_epoch,
            learning_rate,
            seed,
            temperature,
            eta,
            gamma,
            out,
        } => {
            let defaults = DemoConfig::default();
            let cfg = DemoConfig {
                points,
                classes,
                epochs,
                steps_per_epoch: steps_per_epoch.unwrap_or(defaults.steps_per_epoch),
                learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
                seed,
                ..defaults
            };
            let c = DemoComparison::run(
                &cfg,
                &TemperatureSchedule::Fixed { temperature },
                &TemperatureSchedule::Annealing { eta, gamma },
            )?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("demo_loss.csv"), c.loss_csv())?;
            fs::write(out.join("demo_points.csv"), c.points_csv())?;
            let target = c.fixed.epochs.last().map(|e| e.loss).unwrap_or(f64::NAN);
            println!(
                "fixed: loss {:.4} -> {:.4}, k-means acc {:.3}",
                c.fixed.epochs[0].loss, target, c.fixed.final_acc
            );
            println!(
                "annealing: loss {:.4} -> {:.4}, k-means acc {:.3}, reaches fixed final loss at epoch {}",
                c.annealing.epochs[0].loss,
                c.annealing.epochs.last().map(|e| e.loss).unwrap_or(f64::NAN),
                c.annealing.final_acc,
                c.annealing
                    .first_epoch_at_or_below(target)
                    .map_or("never".to_string(), |e| e.to_string())
            );
        }
        Command::Export {
            config,
            checkpoint,
            split,
            out,
        } => {
            let cfg = config.resolve(data_dir)?;
            let ck = Checkpoint::<f64>::load(&checkpoint)?;
            let (train, test) = load_datasets::<f64>(&cfg)?;
            let data = if split == "train" { train } else { test };
            export_embeddings(&ck, &data, &out)?;
            info!("{} codes written to {}", data.len(), out.display());
        }
    }
    Ok(())
}

fn read_embeddings(path: &Path) -> Result<ndarray::Array2<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(read_labelled_csv(path)?.0),
        Some("dsmx") | Some("bin") => Ok(read_binary_matrix(path)?),
        _ => bail!("embeddings must be .csv or .dsmx/.bin, got {}", path.display()),
    }
}

fn print_record(record: &RunRecord) {
    println!("{}", RunRecord::csv_header());
    match record.csv_row() {
        Some(row) => println!("{row}"),
        None => println!("(every seed failed)"),
    }
    for s in &record.seeds {
        if let disentangle::experiment::SeedStatus::Failed { reason } = &s.status {
            println!("seed {} failed: {reason}", s.seed);
        }
    }
}
