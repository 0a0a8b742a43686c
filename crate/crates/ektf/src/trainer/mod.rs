//! The training loop: epoch iteration, Adam updates, validation-driven
//! early stopping, and best-snapshot restoration.
//!
//! Training is single-threaded and fully determined by the dataset, the
//! model's initial parameters, and `TrainConfig::seed` (which drives only
//! the per-epoch shuffle stream). Two runs with equal inputs produce
//! bit-identical parameters, losses, and metrics.

pub mod metrics;

pub use metrics::{auc, logloss, Metrics};

use crate::data::EncodedDataset;
use crate::error::{EktfError, Result};
use crate::model::{EnsembleModel, ParamMap};
use crate::numkit::adam::{adam_step, AdamConfig, AdamState};
use crate::numkit::matrix::Matrix;
use crate::numkit::rng::derive_seed;
use crate::objective::{eval_prediction, total_loss, LossBreakdown, ObjectiveSpec};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

/// Stream offset for per-epoch shuffle seeds, disjoint from the model-init
/// streams (0..=K) derived from the same base seed.
const SHUFFLE_STREAM: u64 = 1_000_000;

/// Loop hyperparameters. The optimizer settings ride along in `adam`.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Forward-only batch size for validation / test passes.
    pub eval_batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many consecutive epochs without a strict validation
    /// AUC improvement; 0 disables early stopping.
    pub patience: usize,
    pub adam: AdamConfig,
    /// Base seed for the shuffle stream (independent of model init).
    pub seed: u64,
    /// Reshuffle training rows every epoch (file order when off).
    pub shuffle: bool,
    /// Record wall-clock duration; off in strictly reproducible runs so
    /// that reports are byte-identical.
    pub record_walltime: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            eval_batch_size: 4096,
            max_epochs: 10,
            patience: 2,
            adam: AdamConfig::default(),
            seed: 0,
            shuffle: true,
            record_walltime: true,
        }
    }
}

/// Metrics of the ensemble prediction and of each student alone.
#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub ensemble: Metrics,
    pub per_student: Vec<Metrics>,
}

/// What one epoch did. Loss components are example-weighted epoch means.
#[derive(Clone, Debug, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Mean per-student CTR component.
    pub ctr_loss: f64,
    /// Summed distillation component.
    pub kd_loss: f64,
    /// Summed mutual-learning component.
    pub dml_loss: f64,
    /// Mean distillation weight per student (diagnoses the examination).
    pub lambda_mean: Vec<f64>,
    pub val: Option<EvalReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Total optimizer steps taken.
    pub steps: u64,
    /// Epoch whose snapshot the model was restored to (validation runs only).
    pub best_epoch: Option<usize>,
    pub best_val_auc: Option<f64>,
    pub stopped_early: bool,
    pub wall_secs: Option<f64>,
}

/// Forward the whole dataset and score the evaluation prediction plus each
/// student individually.
pub fn evaluate(
    model: &EnsembleModel,
    spec: &ObjectiveSpec,
    dataset: &EncodedDataset,
    batch_size: usize,
) -> Result<EvalReport> {
    if dataset.num_rows() == 0 {
        return Err(EktfError::Data("cannot evaluate on an empty dataset".into()));
    }
    let outputs = model.predict(dataset, batch_size)?;
    let y_hat = eval_prediction(spec.variant, spec.fusion, &outputs, model.concat_head_ref())?;
    let labels = dataset.labels();
    let ensemble = metrics::compute(&y_hat, labels)?;
    let per_student = outputs
        .probs
        .iter()
        .map(|p| metrics::compute(p, labels))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        ensemble,
        per_student,
    })
}

/// Train `model` in place. With a validation set, tracks the best ensemble
/// AUC, stops early after `patience` stale epochs, and restores the best
/// epoch's parameters before returning.
pub fn train(
    model: &mut EnsembleModel,
    spec: &ObjectiveSpec,
    train_set: &EncodedDataset,
    val_set: Option<&EncodedDataset>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if cfg.batch_size == 0 || cfg.eval_batch_size == 0 {
        return Err(EktfError::Config("batch sizes must be >= 1".into()));
    }
    if cfg.max_epochs == 0 {
        return Err(EktfError::Config("max_epochs must be >= 1".into()));
    }
    if train_set.num_rows() == 0 {
        return Err(EktfError::Data("training set is empty".into()));
    }
    let start = cfg.record_walltime.then(Instant::now);
    let k = model.num_students();
    let n = train_set.num_rows() as f64;

    let mut adam_states: BTreeMap<String, AdamState> = BTreeMap::new();
    let mut step: u64 = 0;
    let mut best: Option<(f64, usize, Vec<(String, Matrix)>)> = None;
    let mut stale_epochs = 0usize;
    let mut stopped_early = false;
    let mut epochs = Vec::with_capacity(cfg.max_epochs);

    for e in 1..=cfg.max_epochs {
        let shuffle_seed = cfg
            .shuffle
            .then(|| derive_seed(cfg.seed, SHUFFLE_STREAM + e as u64));
        let mut loss_sum = 0.0;
        let mut ctr_sum = 0.0;
        let mut kd_sum = 0.0;
        let mut dml_sum = 0.0;
        let mut lambda_sum = vec![0.0; k];

        for batch in train_set.batches(cfg.batch_size, shuffle_seed) {
            let (outputs, bundle) = model.forward(&batch)?;
            let LossBreakdown {
                total,
                ctr_per_student,
                kd_per_student,
                dml_per_student,
                lambda,
                dlogits,
                dconcat,
                ..
            } = total_loss(spec, &outputs, &batch.y, model.concat_head_ref())?;
            if !total.is_finite() {
                return Err(EktfError::Train(format!(
                    "non-finite training loss {total} at epoch {e}, step {}",
                    step + 1
                )));
            }
            let grads = model.backward(&batch, bundle, &dlogits, dconcat)?;
            step += 1;
            apply_adam(model, &grads, &mut adam_states, &cfg.adam, step)?;

            let w = batch.y.len() as f64;
            loss_sum += total * w;
            ctr_sum += ctr_per_student.iter().sum::<f64>() / k as f64 * w;
            kd_sum += kd_per_student.iter().sum::<f64>() * w;
            dml_sum += dml_per_student.iter().sum::<f64>() * w;
            for (acc, l) in lambda_sum.iter_mut().zip(&lambda) {
                *acc += l * w;
            }
        }

        let val = match val_set {
            Some(v) => Some(evaluate(model, spec, v, cfg.eval_batch_size)?),
            None => None,
        };
        epochs.push(EpochRecord {
            epoch: e,
            train_loss: loss_sum / n,
            ctr_loss: ctr_sum / n,
            kd_loss: kd_sum / n,
            dml_loss: dml_sum / n,
            lambda_mean: lambda_sum.iter().map(|v| v / n).collect(),
            val: val.clone(),
        });

        if let Some(val) = &val {
            let score = val.ensemble.auc;
            if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                best = Some((score, e, model.snapshot()));
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if cfg.patience > 0 && stale_epochs >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let (best_epoch, best_val_auc) = match &best {
        Some((score, e, snapshot)) => {
            model.restore(snapshot)?;
            (Some(*e), Some(*score))
        }
        None => (None, None),
    };
    Ok(TrainReport {
        epochs,
        steps: step,
        best_epoch,
        best_val_auc,
        stopped_early,
        wall_secs: start.map(|s| s.elapsed().as_secs_f64()),
    })
}

/// Apply one Adam step to every parameter that received a gradient.
/// Parameters outside the current loss path (e.g. an idle concat head) are
/// legitimately absent from `grads`; a gradient whose name matches no
/// parameter is a wiring bug and is reported.
fn apply_adam(
    model: &mut EnsembleModel,
    grads: &ParamMap,
    states: &mut BTreeMap<String, AdamState>,
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    let mut outcome = Ok(());
    let mut consumed = 0usize;
    model.visit_params_mut(&mut |name, param| {
        if outcome.is_err() {
            return;
        }
        if let Some(g) = grads.get(&name) {
            consumed += 1;
            let state = states
                .entry(name.clone())
                .or_insert_with(|| AdamState::for_param(param));
            outcome = adam_step(&name, param, g, state, cfg, t);
        }
    });
    outcome?;
    if consumed != grads.len() {
        let mut param_names = BTreeSet::new();
        model.visit_params(&mut |n, _| {
            param_names.insert(n);
        });
        let orphans: Vec<&str> = grads
            .keys()
            .filter(|k| !param_names.contains(*k))
            .map(String::as_str)
            .collect();
        return Err(EktfError::Train(format!(
            "gradients for unknown parameters: {}",
            orphans.join(", ")
        )));
    }
    Ok(())
}
