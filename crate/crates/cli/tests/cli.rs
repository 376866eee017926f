use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disentangle"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("DISENTANGLE_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const TINY: &str = "\
# small synthetic run
dataset = synthetic-gaussian
model = snnl-5
hidden = 16, 8
latent_dim = 3
snnl_layers = 1, 2, 3
epochs = 20
batch_size = 32
synthetic_train_samples = 200
synthetic_test_samples = 120
synthetic_dim = 10
synthetic_classes = 3
seeds = 0, 1
";

fn tiny_config(dir: &Path) -> String {
    let p = dir.join("tiny.cfg");
    fs::write(&p, TINY).unwrap();
    p.display().to_string()
}

#[test]
fn experiment_writes_reports_and_flags_override_the_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("run");
    let o = out.display().to_string();
    ok(&["experiment", "-c", &cfg, "--epochs", "2", "--set", "learning_rate=0.01", "--output-dir", &o]);
    for f in ["config.txt", "report.json", "report.csv", "loss_trace.csv", "seed-0/embeddings.csv", "seed-1/model.ckpt"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let written = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(written.contains("epochs = 2"), "{written}");
    assert!(written.contains("learning_rate = 0.01"));
    let trace = fs::read_to_string(out.join("loss_trace.csv")).unwrap();
    // header + 2 seeds x 2 epochs
    assert_eq!(trace.lines().count(), 5);
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("acc_avg,acc_best"));
}

#[test]
fn cluster_then_evaluate_an_exported_embedding() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let t = tmp.path().display().to_string();
    ok(&["train", "-c", &cfg, "--output-dir", &t, "--seed", "3"]);
    let ckpt = tmp.path().join("model.ckpt");
    assert!(ckpt.is_file() && tmp.path().join("loss_trace.csv").is_file());

    let emb = tmp.path().join("codes.csv");
    let (c, e) = (ckpt.display().to_string(), emb.display().to_string());
    ok(&["export", "-c", &cfg, "--checkpoint", &c, "--out", &e]);
    let text = fs::read_to_string(&emb).unwrap();
    assert_eq!(text.lines().next().unwrap(), "z0,z1,z2,label");
    assert_eq!(text.lines().count(), 121);
    ok(&["export", "-c", &cfg, "--checkpoint", &c, "--out", &format!("{e}.again")]);
    assert_eq!(fs::read(&emb).unwrap(), fs::read(format!("{e}.again")).unwrap());

    let cl = tmp.path().join("clusters");
    let cls = cl.display().to_string();
    let stdout = ok(&["cluster", "--embeddings", &e, "-k", "3", "--out", &cls]);
    assert!(stdout.starts_with("inertia "));
    assert_eq!(fs::read_to_string(cl.join("clusters.csv")).unwrap().lines().count(), 121);
    let scores = ok(&["evaluate", "--embeddings", &e, "--clusters", &cl.join("clusters.csv").display().to_string()]);
    let json: serde_json::Value = serde_json::from_str(&scores).unwrap();
    let acc = json["acc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn demo_writes_plot_ready_csv() {
    let tmp = TempDir::new().unwrap();
    let o = tmp.path().display().to_string();
    let stdout = ok(&["demo", "--points", "40", "--epochs", "3", "--steps-per-epoch", "5", "--out", &o]);
    assert!(stdout.contains("fixed:") && stdout.contains("annealing:"));
    let loss = fs::read_to_string(tmp.path().join("demo_loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 1 + 4);
    let points = fs::read_to_string(tmp.path().join("demo_points.csv")).unwrap();
    assert!(points.starts_with("schedule,epoch,x0,x1,label"));
}

#[test]
fn sweep_prints_one_row_per_size() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let stdout = ok(&["sweep", "-c", &cfg, "--epochs", "1", "--sizes", "50,100"]);
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows[0], "size,acc_avg,acc_best,nmi_avg,nmi_best,failed_seeds");
    assert!(rows[1].starts_with("50,") && rows[2].starts_with("100,"));
}

#[test]
fn bad_settings_fail_with_a_message() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = run(&["experiment", "-c", &cfg, "--set", "no_such_key=1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
    let out = run(&["experiment", "-c", &cfg, "--seeds", "0,1", "--repeats", "3"]);
    assert!(!out.status.success());
}

#[test]
fn missing_dataset_names_the_data_directory() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().display().to_string();
    let out = run(&["--data-dir", &d, "experiment", "--dataset", "mnist", "--model", "original-pca"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&d), "{err}");
}
