//! Experiment harness: a sectioned text config describing one run, plus
//! the five commands built on it — preprocess a dataset into a cache,
//! train a single ensemble, sweep ensemble size × fusion × objective,
//! run the loss-component ablation grid, and aggregate result tables
//! into medians/IQRs with scaling-trend classification.
//!
//! Sweeps and ablations are resumable: each completed cell is persisted
//! immediately (atomic whole-file rewrite), and a rerun reuses every
//! finished row, retrying only missing or failed ones.

pub mod ablate;
pub mod commands;
pub mod report;
pub mod runconfig;
pub mod sweep;

pub use ablate::{cmd_ablate, read_ablate_csv, AblateKey, AblateOutput, AblateResult, AblateRow};
pub use commands::{
    build_dataset, cmd_preprocess, cmd_train, run_cell, split_dataset, PreprocessSummary,
    RunOutcome, TrainArtifacts, TrainSummary,
};
pub use report::{
    cmd_report, median, quantile, spread, Report, ReportOutput, ScalingTrend, Spread,
    NOISE_AUC,
};
pub use runconfig::{
    fusion_label, parse_fusion, parse_variant, variant_label, Ablation, DatasetSection,
    DatasetSource, ModelSection, OutputSection, RunConfig, SweepSection, TrainingSection,
};
pub use sweep::{cmd_sweep, read_sweep_csv, CellMetrics, CellResult, SweepKey, SweepOutput, SweepRow};
