//! The headline experiment at desk scale: sweep ensemble size for plain
//! ensemble training versus transfer training, then aggregate the runs
//! into a per-size median table and a scaling-trend classification.
//!
//! Plain ensembles tend to go flat (or worse) as students are added; the
//! transfer objective keeps scaling because students teach each other.
//!
//! Run with: `cargo run --example ensemble_scaling`

use ektf::harness::{cmd_report, cmd_sweep, RunConfig};

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
        students = ["mlp"]
        embedding_dim = 4
        hidden = [16, 8]

        [training]
        batch_size = 512
        max_epochs = 4
        patience = 4
        learning_rate = 0.005
        seed = 42

        [sweep]
        ensemble_sizes = [1, 2, 4]
        fusions = ["mean"]
        variants = ["vanilla", "ektf"]
        seeds = [1, 2, 3]
        "#,
    )?;

    let dir = tempfile::tempdir()?;
    println!("training 2 variants x 3 sizes x 3 seeds = 18 cells ...");
    let sweep = cmd_sweep(&config, dir.path(), true)?;
    println!("done: {} cells trained -> {}\n", sweep.ran, sweep.csv_path.display());

    let report = cmd_report(dir.path())?;
    let summary = report.report.sweep.expect("sweep table was just written");

    println!("{:<10}{:>4}{:>14}{:>12}", "variant", "K", "median AUC", "IQR");
    for g in &summary.groups {
        let s = g.auc.expect("all cells succeeded");
        println!("{:<10}{:>4}{:>14.4}{:>12.4}", g.variant, g.k, s.median, s.iqr);
    }

    println!();
    for t in &summary.trends {
        println!(
            "{:<10} K={} -> K={}: median AUC {:.4} -> {:.4}  [{}]",
            t.variant, t.min_k, t.max_k, t.median_auc_at_min_k, t.median_auc_at_max_k,
            t.direction
        );
    }

    // The gap column: ensemble AUC minus the best single student's AUC.
    // Transfer training narrows it because students converge on shared
    // knowledge while staying individually strong.
    println!("\ngap to best student at the largest size (median):");
    for g in summary.groups.iter().filter(|g| g.k == 4) {
        println!("  {:<10}{:+.4}", g.variant, g.gap_auc.expect("ok runs").median);
    }
    Ok(())
}
