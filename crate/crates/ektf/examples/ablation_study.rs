//! Which pieces of the transfer objective matter? Train five arms over a
//! shared seed set — the full objective, distillation only, mutual
//! learning only, no examination (uniform weights), and no transfer at
//! all — then compare their median test AUC.
//!
//! Run with: `cargo run --example ablation_study`

use ektf::harness::{cmd_ablate, cmd_report, RunConfig};

fn main() -> ektf::Result<()> {
    let config = RunConfig::parse(
        r#"
        [dataset]
        source = "synthetic"
        seed = 7
        [dataset.synthetic]
        num_rows = 8000
        num_fields = 6
        vocab_size = 30
        num_interaction_pairs = 4

        [model]
        students = ["mlp", "mlp", "mlp"]
        embedding_dim = 4
        hidden = [16, 8]

        [training]
        batch_size = 512
        max_epochs = 4
        patience = 4
        learning_rate = 0.005

        [ablate]
        ablations = ["ektf", "only_kd", "only_dml", "wo_em", "wo_all"]
        seeds = [1, 2, 3]
        "#,
    )?;

    let dir = tempfile::tempdir()?;
    println!("training 5 arms x 3 seeds = 15 cells ...");
    let ablate = cmd_ablate(&config, dir.path(), true)?;
    println!("done: {} cells trained -> {}\n", ablate.ran, ablate.csv_path.display());

    let report = cmd_report(dir.path())?;
    let groups = report.report.ablate.expect("ablation table was just written");

    println!("{:<10}{:>14}{:>16}", "arm", "median AUC", "median logloss");
    for g in &groups {
        let auc = g.auc.expect("all cells succeeded");
        let ll = g.logloss.expect("all cells succeeded");
        println!("{:<10}{:>14.4}{:>16.4}", g.ablation, auc.median, ll.median);
    }

    // arm legend:
    //   ektf      full objective (distillation + mutual learning + exam)
    //   only_kd   distillation toward the ensemble mean, nothing else
    //   only_dml  peer-to-peer mutual learning, nothing else
    //   wo_em     full objective but uniform weights instead of the exam
    //   wo_all    plain ensemble training (no transfer terms at all)
    let median = |label: &str| {
        groups
            .iter()
            .find(|g| g.ablation == label)
            .and_then(|g| g.auc)
            .expect("arm present")
            .median
    };
    println!(
        "\nfull objective vs. no transfer: {:+.4} AUC",
        median("ektf") - median("wo_all")
    );
    Ok(())
}
