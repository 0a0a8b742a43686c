//! The preprocess and train operations, plus the single-run core that the
//! sweep and ablation grids reuse.

use super::runconfig::{
    fusion_label, variant_label, CsvSection, DatasetSection, DatasetSource, ModelSection,
    RunConfig, TrainingSection,
};
use crate::data::{
    ingest_csv, synthesize, EncodedDataset, FeatureSchema, FieldDef, FieldKind, FieldRole,
    Generator, IngestOptions,
};
use crate::error::{EktfError, Result};
use crate::model::{save_checkpoint, EnsembleModel, StudentKind};
use crate::numkit::rng::derive_seed;
use crate::objective::{Fusion, ObjectiveSpec};
use crate::trainer::{evaluate, train, EvalReport, TrainReport};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Stream index for the split shuffle, disjoint from synthesis and from
/// the trainer's shuffle streams.
const SPLIT_STREAM: u64 = 777_777;

/// Materialize the configured dataset (synthesized, ingested, or loaded
/// from cache) plus the generative model when one exists.
pub fn build_dataset(section: &DatasetSection) -> Result<(EncodedDataset, Option<Generator>)> {
    match section.source {
        DatasetSource::Synthetic => {
            let spec = section.synthetic.as_ref().expect("validated");
            let (dataset, generator) = synthesize(spec, section.seed)?;
            Ok((dataset, Some(generator)))
        }
        DatasetSource::Csv => {
            let csv = section.csv.as_ref().expect("validated");
            let schema = csv_schema(csv)?;
            let options = IngestOptions {
                min_count: csv.min_count,
                ..IngestOptions::default()
            };
            let (dataset, _vocabs) = ingest_csv(&csv.path, &schema, &options)?;
            Ok((dataset, None))
        }
        DatasetSource::Cache => {
            let path = section.cache.as_ref().expect("validated");
            Ok((EncodedDataset::load_cache(path)?, None))
        }
    }
}

/// Feature schema implied by a CSV section: categorical columns first,
/// numeric columns after, label separate.
pub fn csv_schema(csv: &CsvSection) -> Result<FeatureSchema> {
    let mut fields = Vec::with_capacity(csv.categorical.len() + csv.numeric.len());
    for name in &csv.categorical {
        fields.push(FieldDef {
            name: name.clone(),
            kind: FieldKind::Categorical,
            role: FieldRole::Context,
        });
    }
    for name in &csv.numeric {
        fields.push(FieldDef {
            name: name.clone(),
            kind: FieldKind::Numeric,
            role: FieldRole::Context,
        });
    }
    FeatureSchema::new(fields, csv.label.clone())
}

/// Deterministic three-way split driven by the dataset seed.
pub fn split_dataset(
    dataset: &EncodedDataset,
    section: &DatasetSection,
) -> Result<(EncodedDataset, EncodedDataset, EncodedDataset)> {
    let [a, b, c] = section.split;
    dataset.split((a, b, c), derive_seed(section.seed, SPLIT_STREAM))
}

/// What preprocess reports about the encoded dataset.
#[derive(Clone, Debug, Serialize)]
pub struct PreprocessSummary {
    pub source: DatasetSource,
    pub rows: usize,
    pub fields: Vec<String>,
    pub vocab_sizes: Vec<u32>,
    pub positive_rate: f64,
    /// Fraction of values per field that encoded to the OOV id.
    pub oov_rates: Vec<f64>,
    /// Mean generative click probability (synthetic sources only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_ctr_mean: Option<f64>,
    /// AUC of the true click probability against the drawn labels — the
    /// ceiling any model can approach (synthetic sources only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bayes_auc: Option<f64>,
}

/// Build the dataset, write its binary cache and a JSON summary.
pub fn cmd_preprocess(config: &RunConfig, out_dir: &Path) -> Result<PreprocessSummary> {
    std::fs::create_dir_all(out_dir)?;
    let (dataset, _generator) = build_dataset(&config.dataset)?;
    dataset.save_cache(&out_dir.join("dataset.ekds"))?;

    let rows = dataset.num_rows();
    let f = dataset.num_fields();
    let mut oov_counts = vec![0u64; f];
    for i in 0..rows {
        for (j, &id) in dataset.row(i).iter().enumerate() {
            if id == 0 {
                oov_counts[j] += 1;
            }
        }
    }
    let summary = PreprocessSummary {
        source: config.dataset.source,
        rows,
        fields: dataset
            .schema
            .fields
            .iter()
            .map(|fd| fd.name.clone())
            .collect(),
        vocab_sizes: dataset.vocab_sizes.clone(),
        positive_rate: dataset.positive_rate(),
        oov_rates: oov_counts
            .iter()
            .map(|&c| if rows == 0 { 0.0 } else { c as f64 / rows as f64 })
            .collect(),
        true_ctr_mean: dataset
            .true_ctr
            .as_ref()
            .map(|ctr| ctr.iter().sum::<f64>() / ctr.len() as f64),
        bayes_auc: match &dataset.true_ctr {
            Some(ctr) => Some(crate::trainer::auc(ctr, dataset.labels())?),
            None => None,
        },
    };
    write_json(&out_dir.join("preprocess.json"), &summary)?;
    Ok(summary)
}

/// One fully trained and evaluated run.
pub struct RunOutcome {
    pub model: EnsembleModel,
    pub report: TrainReport,
    pub test: EvalReport,
}

/// Train one model on pre-split data: the unit of work shared by the
/// train command and every sweep/ablation cell. `seed` drives both
/// initialization and shuffling for this run.
pub fn run_cell(
    splits: (&EncodedDataset, &EncodedDataset, &EncodedDataset),
    model_section: &ModelSection,
    objective: &ObjectiveSpec,
    training: &TrainingSection,
    seed: u64,
    strict: bool,
) -> Result<RunOutcome> {
    let (train_set, val_set, test_set) = splits;
    let ensemble = model_section.ensemble_config(objective.fusion == Fusion::Concat);
    let mut model = EnsembleModel::init(&ensemble, &train_set.vocab_sizes, seed)?;
    let mut tc = training.train_config(strict);
    tc.seed = seed;
    let report = train(&mut model, objective, train_set, Some(val_set), &tc)?;
    let test = evaluate(&model, objective, test_set, tc.eval_batch_size)?;
    Ok(RunOutcome {
        model,
        report,
        test,
    })
}

/// The train command's JSON summary.
#[derive(Clone, Debug, Serialize)]
pub struct TrainSummary {
    pub students: Vec<StudentKind>,
    pub variant: String,
    pub fusion: String,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub best_val_auc: Option<f64>,
    pub stopped_early: bool,
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_secs: Option<f64>,
    pub test: EvalReport,
}

/// Artifact paths a train run writes.
pub struct TrainArtifacts {
    pub summary: TrainSummary,
    pub epochs_csv: PathBuf,
    pub summary_json: PathBuf,
    pub checkpoint: PathBuf,
}

/// Train per the config; write the epoch log, summary, and checkpoint.
/// If training itself fails, the model's last parameters are saved to
/// `aborted.ekcp` so the failure can be inspected.
pub fn cmd_train(config: &RunConfig, out_dir: &Path, strict: bool) -> Result<TrainArtifacts> {
    std::fs::create_dir_all(out_dir)?;
    let (dataset, _) = build_dataset(&config.dataset)?;
    let (train_set, val_set, test_set) = split_dataset(&dataset, &config.dataset)?;

    let ensemble = config
        .model
        .ensemble_config(config.objective.fusion == Fusion::Concat);
    let seed = config.training.seed;
    let mut model = EnsembleModel::init(&ensemble, &train_set.vocab_sizes, seed)?;
    let mut tc = config.training.train_config(strict);
    tc.seed = seed;

    let report = match train(&mut model, &config.objective, &train_set, Some(&val_set), &tc) {
        Ok(report) => report,
        Err(e) => {
            if matches!(e, EktfError::Train(_)) {
                let snapshot = model.snapshot();
                let refs: Vec<(String, &crate::numkit::matrix::Matrix)> =
                    snapshot.iter().map(|(n, m)| (n.clone(), m)).collect();
                save_checkpoint(&out_dir.join("aborted.ekcp"), &refs)?;
            }
            return Err(e);
        }
    };
    let test = evaluate(&model, &config.objective, &test_set, tc.eval_batch_size)?;

    let epochs_csv = out_dir.join("epochs.csv");
    write_epoch_log(&epochs_csv, &report, model.num_students())?;

    let summary = TrainSummary {
        students: config.model.students.clone(),
        variant: variant_label(config.objective.variant).to_string(),
        fusion: fusion_label(config.objective.fusion).to_string(),
        seed,
        epochs_run: report.epochs.len(),
        best_epoch: report.best_epoch,
        best_val_auc: report.best_val_auc,
        stopped_early: report.stopped_early,
        steps: report.steps,
        wall_secs: report.wall_secs,
        test,
    };
    let summary_json = out_dir.join("summary.json");
    write_json(&summary_json, &summary)?;

    let checkpoint = out_dir.join("model.ekcp");
    let snapshot = model.snapshot();
    let refs: Vec<(String, &crate::numkit::matrix::Matrix)> =
        snapshot.iter().map(|(n, m)| (n.clone(), m)).collect();
    save_checkpoint(&checkpoint, &refs)?;

    Ok(TrainArtifacts {
        summary,
        epochs_csv,
        summary_json,
        checkpoint,
    })
}

/// Wrap any writer-level failure with the file it concerned.
pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> EktfError {
    EktfError::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

/// Epoch log: one row per epoch, ensemble metrics then per-student pairs.
fn write_epoch_log(path: &Path, report: &TrainReport, k: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec![
        "epoch".to_string(),
        "train_loss".to_string(),
        "val_logloss_ensemble".to_string(),
        "val_auc_ensemble".to_string(),
    ];
    for i in 1..=k {
        header.push(format!("val_logloss_{i}"));
        header.push(format!("val_auc_{i}"));
    }
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for epoch in &report.epochs {
        let mut row = vec![epoch.epoch.to_string(), fmt(epoch.train_loss)];
        match &epoch.val {
            Some(val) => {
                row.push(fmt(val.ensemble.logloss));
                row.push(fmt(val.ensemble.auc));
                for m in &val.per_student {
                    row.push(fmt(m.logloss));
                    row.push(fmt(m.auc));
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 2 + 2 * k)),
        }
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Shortest-roundtrip float formatting: exact, compact, deterministic.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Pretty JSON with a trailing newline, bytes fully determined by `value`.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| io_err(path, e))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}
