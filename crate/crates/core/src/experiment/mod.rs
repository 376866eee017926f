//! End-to-end runs: configuration, training, clustering the test-set codes
//! and scoring them, repeated over seeds; plus the few-labels sweep,
//! embedding export and the synthetic point-cloud demo.

mod config;
mod demo;
mod pipeline;
mod train;

pub use config::{parse_pairs, DatasetKind, ExperimentConfig, ModelKind, Precision};
pub use demo::{demo_points, synthetic_gaussian_demo, DemoComparison, DemoConfig, DemoEpoch, DemoTrace};
pub use pipeline::{
    export_embeddings, few_labels_sweep, load_datasets, resolve_data_dir, run_experiment, run_seed,
    train_seed, training_set, RunRecord, SeedOutput, SeedRecord, SeedStatus, SweepRow, SweepTable, TrainedModel, DATA_DIR_ENV,
};
pub use train::{train, EpochLog, TrainSettings};
