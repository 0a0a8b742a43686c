//! Generate a synthetic click dataset with a known ground-truth click
//! probability per row, split it deterministically, and measure the best
//! AUC any model could reach (scoring rows by the true probability).
//!
//! Run with: `cargo run --example synthesize_dataset`

use ektf::data::{synthesize, SyntheticConfig};
use ektf::trainer::auc;

fn main() -> ektf::Result<()> {
    let config = SyntheticConfig {
        num_rows: 20_000,
        num_fields: 6,
        vocab_size: 30,
        num_interaction_pairs: 4,
        ..SyntheticConfig::default()
    };
    let (dataset, generator) = synthesize(&config, 42)?;

    println!(
        "generated {} rows x {} fields (vocab {} per field)",
        dataset.num_rows(),
        dataset.num_fields(),
        config.vocab_size
    );
    println!("positive rate: {:.4}", dataset.positive_rate());

    let true_ctr = dataset.true_ctr.as_ref().expect("synthetic data carries true CTR");
    let mean_ctr = true_ctr.iter().sum::<f64>() / true_ctr.len() as f64;
    println!("mean true click probability: {mean_ctr:.4}");

    // The generator itself can rescore any row.
    let first = generator.true_ctr(dataset.row(0));
    assert_eq!(first, true_ctr[0]);
    println!("row 0: ids {:?} -> true CTR {first:.4}", dataset.row(0));

    // Same fractions + seed always produce the same split.
    let (train, val, test) = dataset.split((0.8, 0.1, 0.1), 7)?;
    println!(
        "\nsplit 80/10/10 -> {} / {} / {} rows",
        train.num_rows(),
        val.num_rows(),
        test.num_rows()
    );

    // Labels are Bernoulli draws from the true probability, so scoring by
    // that probability is the Bayes-optimal ranker; its AUC is the ceiling
    // any trained model can approach on this dataset.
    let bayes = auc(
        test.true_ctr.as_ref().expect("split keeps true CTR"),
        test.labels(),
    )?;
    println!("Bayes-optimal test AUC: {bayes:.4}");
    Ok(())
}
