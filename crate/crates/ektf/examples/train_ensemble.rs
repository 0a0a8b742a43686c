//! Train a three-student ensemble (two feed-forward nets and one
//! feature-crossing net) with the full transfer objective, watch the
//! per-epoch losses and validation metrics, then round-trip the trained
//! parameters through a checkpoint file.
//!
//! Run with: `cargo run --example train_ensemble`

use ektf::data::{synthesize, SyntheticConfig};
use ektf::model::{
    load_checkpoint, save_checkpoint, EnsembleConfig, EnsembleModel, StudentArch, StudentKind,
};
use ektf::objective::ObjectiveSpec;
use ektf::trainer::{evaluate, train, TrainConfig};

fn main() -> ektf::Result<()> {
    let (dataset, _) = synthesize(
        &SyntheticConfig {
            num_rows: 12_000,
            num_fields: 6,
            vocab_size: 30,
            num_interaction_pairs: 4,
            ..SyntheticConfig::default()
        },
        3,
    )?;
    let (train_set, val_set, test_set) = dataset.split((0.8, 0.1, 0.1), 7)?;

    let model_config = EnsembleConfig {
        students: vec![StudentKind::Mlp, StudentKind::Crossnet, StudentKind::Mlp],
        embedding_dim: 8,
        arch: StudentArch {
            hidden: vec![32, 16],
            cross_layers: 2,
            init_std: 0.01,
        },
        shared_embeddings: false,
        with_concat_head: false,
    };
    let mut model = EnsembleModel::init(&model_config, &train_set.vocab_sizes, 42)?;

    // The default objective: averaged per-student CTR loss + distillation
    // toward the ensemble mean + mutual learning between peers, all
    // weighted per batch by the examination scores.
    let objective = ObjectiveSpec::default();
    let train_config = TrainConfig {
        batch_size: 256,
        max_epochs: 8,
        patience: 3,
        seed: 42,
        ..TrainConfig::default()
    };

    let report = train(&mut model, &objective, &train_set, Some(&val_set), &train_config)?;

    println!("epoch  train_loss  ctr      kd        dml       val_auc");
    for e in &report.epochs {
        let val_auc = e.val.as_ref().map_or(f64::NAN, |v| v.ensemble.auc);
        println!(
            "{:>5}  {:>10.5}  {:>7.5}  {:>8.6}  {:>8.6}  {:>7.4}",
            e.epoch, e.train_loss, e.ctr_loss, e.kd_loss, e.dml_loss, val_auc
        );
    }
    println!(
        "\n{} optimizer steps; best epoch {:?} (val AUC {:?}); stopped early: {}",
        report.steps, report.best_epoch, report.best_val_auc, report.stopped_early
    );

    let test = evaluate(&model, &objective, &test_set, 4096)?;
    println!(
        "\ntest: ensemble logloss {:.5}, AUC {:.5}",
        test.ensemble.logloss, test.ensemble.auc
    );
    for (k, m) in test.per_student.iter().enumerate() {
        println!("      student {k}: logloss {:.5}, AUC {:.5}", m.logloss, m.auc);
    }

    // Checkpoint round-trip: a fresh model restored from the file makes
    // bitwise-identical predictions.
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("ensemble.ekcp");
    let snapshot = model.snapshot();
    let named: Vec<(String, &ektf::numkit::Matrix)> =
        snapshot.iter().map(|(n, m)| (n.clone(), m)).collect();
    save_checkpoint(&path, &named)?;

    let mut restored = EnsembleModel::init(&model_config, &train_set.vocab_sizes, 999)?;
    restored.restore(&load_checkpoint(&path)?)?;
    let before = model.predict(&test_set, 4096)?;
    let after = restored.predict(&test_set, 4096)?;
    assert_eq!(before.probs, after.probs);
    println!("\ncheckpoint round-trip OK: restored model predicts identically");
    Ok(())
}
