//! Config-driven experiment runner: training with snapshots, checkpoint
//! persistence, attack sweeps, transfer matrices, Lipschitz tables and the
//! files the command-line tool writes.

mod checkpoint;
mod config;
mod pipeline;
mod tables;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, EpochMetrics, ParamArray, CHECKPOINT_VERSION};
pub use config::{ExperimentConfig, Variant};
pub use pipeline::{
    attack_to_dir, gen_data, lipschitz_to_dir, report_to_dir, study_variants, train_study, train_to_dir,
    transfer_to_dir,
};
pub use tables::{
    attack_config, attack_samples, checkpoint_label, run_attack_sweep, run_lipschitz_table,
    run_regularization_report, run_transfer_matrix, LipschitzRow, LipschitzTable, MetricsRow, MetricsTable,
    RegularizationRow,
};
pub use train::{evaluate_split, run_train, train_variant, TrainSettings};
