//! CSV ingestion: parse to tokens (numeric fields discretized), build
//! per-field vocabularies, encode to integer ids.

use super::dataset::EncodedDataset;
use super::schema::{FeatureSchema, FieldKind};
use super::vocab::{discretize_numeric, Vocab};
use crate::error::{EktfError, Result};
use std::path::Path;

/// Ingestion knobs beyond the schema itself.
#[derive(Clone, Debug)]
pub struct IngestOptions {
    /// Tokens below this frequency map to the OOV id.
    pub min_count: u64,
    /// Label spellings accepted as positive / negative.
    pub truthy: Vec<String>,
    pub falsy: Vec<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            min_count: 1,
            truthy: vec!["1".into(), "true".into()],
            falsy: vec!["0".into(), "false".into()],
        }
    }
}

/// Per-field vocabularies from a training file, reusable for encoding
/// held-out files against the same id space.
#[derive(Clone, Debug)]
pub struct FieldVocabs {
    pub vocabs: Vec<Vocab>,
}

impl FieldVocabs {
    pub fn sizes(&self) -> Vec<u32> {
        self.vocabs.iter().map(|v| v.size()).collect()
    }
}

/// File parsed to per-field token columns plus labels; the intermediate
/// form between CSV text and integer encoding.
struct TokenColumns {
    columns: Vec<Vec<String>>,
    labels: Vec<u8>,
}

fn parse_csv(path: &Path, schema: &FeatureSchema, options: &IngestOptions) -> Result<TokenColumns> {
    if !path.exists() {
        return Err(EktfError::Data(format!("{} does not exist", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| EktfError::Data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| EktfError::Data(format!("{}: cannot read header: {e}", path.display())))?
        .clone();
    let f = schema.num_fields();
    let mut col_of = Vec::with_capacity(f);
    for field in &schema.fields {
        let idx = headers.iter().position(|h| h == field.name).ok_or_else(|| {
            EktfError::Data(format!(
                "{}: column {:?} not found in header",
                path.display(),
                field.name
            ))
        })?;
        col_of.push(idx);
    }
    let label_col = headers
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| {
            EktfError::Data(format!(
                "{}: label column {:?} not found in header",
                path.display(),
                schema.label_column
            ))
        })?;

    let mut columns: Vec<Vec<String>> = vec![Vec::new(); f];
    let mut labels: Vec<u8> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2; // 1-based, after the header line
        let record =
            record.map_err(|e| EktfError::Data(format!("{}:{line}: {e}", path.display())))?;
        for (j, field) in schema.fields.iter().enumerate() {
            let raw = record.get(col_of[j]).ok_or_else(|| {
                EktfError::Data(format!(
                    "{}:{line}: missing value for column {:?}",
                    path.display(),
                    field.name
                ))
            })?;
            let token = match field.kind {
                FieldKind::Categorical => raw.to_string(),
                FieldKind::Numeric => {
                    let x: f64 = raw.trim().parse().map_err(|_| {
                        EktfError::Data(format!(
                            "{}:{line}: column {:?}: {raw:?} is not numeric",
                            path.display(),
                            field.name
                        ))
                    })?;
                    discretize_numeric(x).map_err(|e| {
                        EktfError::Data(format!(
                            "{}:{line}: column {:?}: {e}",
                            path.display(),
                            field.name
                        ))
                    })?
                }
            };
            columns[j].push(token);
        }
        let raw_label = record
            .get(label_col)
            .ok_or_else(|| EktfError::Data(format!("{}:{line}: missing label", path.display())))?;
        let trimmed = raw_label.trim();
        let y = if options.truthy.iter().any(|t| t == trimmed) {
            1
        } else if options.falsy.iter().any(|t| t == trimmed) {
            0
        } else {
            return Err(EktfError::Data(format!(
                "{}:{line}: label {raw_label:?} is neither positive nor negative",
                path.display()
            )));
        };
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(EktfError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(TokenColumns { columns, labels })
}

fn encode_columns(
    schema: &FeatureSchema,
    parsed: TokenColumns,
    vocabs: &FieldVocabs,
) -> Result<EncodedDataset> {
    let f = schema.num_fields();
    let n = parsed.labels.len();
    let mut rows = Vec::with_capacity(n * f);
    for i in 0..n {
        for (j, vocab) in vocabs.vocabs.iter().enumerate() {
            rows.push(vocab.encode(&parsed.columns[j][i]));
        }
    }
    EncodedDataset::new(schema.clone(), vocabs.sizes(), rows, parsed.labels, None)
}

/// Read a training file: build vocabularies from its tokens, then encode.
pub fn ingest_csv(
    path: &Path,
    schema: &FeatureSchema,
    options: &IngestOptions,
) -> Result<(EncodedDataset, FieldVocabs)> {
    let parsed = parse_csv(path, schema, options)?;
    let mut vocabs = Vec::with_capacity(schema.num_fields());
    for column in &parsed.columns {
        vocabs.push(Vocab::build(
            column.iter().map(|s| s.as_str()),
            options.min_count,
        )?);
    }
    let field_vocabs = FieldVocabs { vocabs };
    let dataset = encode_columns(schema, parsed, &field_vocabs)?;
    Ok((dataset, field_vocabs))
}

/// Encode a held-out file against existing vocabularies; tokens absent from
/// the training vocabulary become the OOV id.
pub fn encode_csv(
    path: &Path,
    schema: &FeatureSchema,
    vocabs: &FieldVocabs,
    options: &IngestOptions,
) -> Result<EncodedDataset> {
    let parsed = parse_csv(path, schema, options)?;
    encode_columns(schema, parsed, vocabs)
}
