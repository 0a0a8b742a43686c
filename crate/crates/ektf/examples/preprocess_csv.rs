//! Ingest a raw CSV of clicks: build per-field vocabularies with a
//! frequency threshold, discretize numeric columns into log-scale buckets,
//! and encode a second file with the frozen vocabulary (unseen tokens fall
//! into the out-of-vocabulary id 0).
//!
//! Run with: `cargo run --example preprocess_csv`

use ektf::data::{
    discretize_numeric, encode_csv, ingest_csv, FeatureSchema, FieldDef, FieldKind, FieldRole,
    IngestOptions,
};

fn main() -> ektf::Result<()> {
    let dir = tempfile::tempdir()?;

    // Raw training data: "desktop" and "mobile" are frequent, "tablet" and
    // "tv" appear once each and will be folded into the OOV id by the
    // min_count=2 threshold below.
    let train_path = dir.path().join("clicks_train.csv");
    std::fs::write(
        &train_path,
        "\
device,ad_topic,price,clicked
desktop,sports,1.0,1
desktop,sports,2.0,0
desktop,news,9.0,0
mobile,news,9.0,1
mobile,sports,100.0,0
mobile,news,1.5,1
tablet,sports,9.0,0
tv,autos,2.0,1
",
    )?;

    let schema = FeatureSchema::new(
        vec![
            FieldDef {
                name: "device".into(),
                kind: FieldKind::Categorical,
                role: FieldRole::Context,
            },
            FieldDef {
                name: "ad_topic".into(),
                kind: FieldKind::Categorical,
                role: FieldRole::Context,
            },
            FieldDef {
                name: "price".into(),
                kind: FieldKind::Numeric,
                role: FieldRole::Context,
            },
        ],
        "clicked",
    )?;

    let options = IngestOptions {
        min_count: 2,
        ..IngestOptions::default()
    };
    let (dataset, vocabs) = ingest_csv(&train_path, &schema, &options)?;

    println!("ingested {} rows, {} fields", dataset.num_rows(), dataset.num_fields());
    println!("positive rate: {:.3}", dataset.positive_rate());
    for (field, vocab) in schema.fields.iter().zip(&vocabs.vocabs) {
        println!("  field {:<10} vocab size {}", field.name, vocab.size());
    }

    // Numeric values share one vocabulary of log-scale buckets, so wildly
    // different prices land in a handful of ids.
    println!("\nlog-scale bucketing of `price`:");
    for x in [1.0, 2.0, 9.0, 100.0] {
        println!("  {x:>6} -> bucket {}", discretize_numeric(x)?);
    }

    // Encoding new data reuses the frozen vocabulary: "watch" was never
    // seen, so it encodes to the OOV id 0, same as the rare "tablet".
    let score_path = dir.path().join("clicks_score.csv");
    std::fs::write(
        &score_path,
        "\
device,ad_topic,price,clicked
watch,sports,9.0,0
tablet,news,1.0,1
desktop,autos,100.0,0
",
    )?;
    let scored = encode_csv(&score_path, &schema, &vocabs, &options)?;
    println!("\nencoded ids for unseen data (0 = out-of-vocabulary):");
    for i in 0..scored.num_rows() {
        println!("  row {i}: {:?}", scored.row(i));
    }

    // The cache file round-trips the encoded dataset byte-for-byte.
    let cache = dir.path().join("clicks.ekds");
    dataset.save_cache(&cache)?;
    let reloaded = ektf::data::EncodedDataset::load_cache(&cache)?;
    assert_eq!(reloaded.num_rows(), dataset.num_rows());
    assert_eq!(reloaded.labels(), dataset.labels());
    println!("\ncache round-trip OK ({} rows)", reloaded.num_rows());
    Ok(())
}
