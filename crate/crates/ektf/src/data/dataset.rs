//! Encoded datasets: integer feature ids, binary labels, splitting,
//! mini-batching, and a binary cache format.

use super::schema::{FeatureSchema, FieldDef, FieldKind, FieldRole};
use crate::bytesio::{write_str, ByteReader};
use crate::error::{EktfError, Result};
use crate::numkit::rng::Rng;
use std::path::Path;

/// A fully encoded dataset: `rows` is row-major N x f of feature ids.
#[derive(Clone, Debug)]
pub struct EncodedDataset {
    pub schema: FeatureSchema,
    /// Per-field id-space size (embedding table row counts).
    pub vocab_sizes: Vec<u32>,
    rows: Vec<u32>,
    labels: Vec<u8>,
    /// Generative click probability per row; synthetic data only.
    pub true_ctr: Option<Vec<f64>>,
}

impl EncodedDataset {
    pub fn new(
        schema: FeatureSchema,
        vocab_sizes: Vec<u32>,
        rows: Vec<u32>,
        labels: Vec<u8>,
        true_ctr: Option<Vec<f64>>,
    ) -> Result<Self> {
        let f = schema.num_fields();
        if vocab_sizes.len() != f {
            return Err(EktfError::Shape(format!(
                "expected {f} vocab sizes, got {}",
                vocab_sizes.len()
            )));
        }
        if rows.len() % f != 0 {
            return Err(EktfError::Shape(format!(
                "row buffer length {} is not a multiple of field count {f}",
                rows.len()
            )));
        }
        let n = rows.len() / f;
        if labels.len() != n {
            return Err(EktfError::Shape(format!(
                "{n} rows but {} labels",
                labels.len()
            )));
        }
        if let Some(ctr) = &true_ctr {
            if ctr.len() != n {
                return Err(EktfError::Shape(format!(
                    "{n} rows but {} true_ctr values",
                    ctr.len()
                )));
            }
        }
        for (i, chunk) in rows.chunks_exact(f).enumerate() {
            for (j, &id) in chunk.iter().enumerate() {
                if id >= vocab_sizes[j] {
                    return Err(EktfError::Data(format!(
                        "row {i}: id {id} out of range for field {} (size {})",
                        schema.fields[j].name, vocab_sizes[j]
                    )));
                }
            }
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(EktfError::Data("labels must be 0 or 1".into()));
        }
        Ok(EncodedDataset {
            schema,
            vocab_sizes,
            rows,
            labels,
            true_ctr,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn num_fields(&self) -> usize {
        self.schema.num_fields()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let f = self.num_fields();
        &self.rows[i * f..(i + 1) * f]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positive_rate(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().map(|&y| y as u64).sum::<u64>() as f64 / self.labels.len() as f64
    }

    /// Materialize a batch from explicit row indices.
    pub fn gather(&self, indices: &[u32]) -> Batch {
        let f = self.num_fields();
        let mut ids = Vec::with_capacity(indices.len() * f);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            ids.extend_from_slice(self.row(i as usize));
            y.push(self.labels[i as usize] as f64);
        }
        Batch {
            ids,
            y,
            num_fields: f,
        }
    }

    /// Deterministic split into train/val/test by shuffled row index.
    /// Sizes are floor(n*train_frac) and floor(n*val_frac); the remainder
    /// becomes the test split, so the partition is exhaustive.
    pub fn split(
        &self,
        fractions: (f64, f64, f64),
        seed: u64,
    ) -> Result<(EncodedDataset, EncodedDataset, EncodedDataset)> {
        let (a, b, c) = fractions;
        if a <= 0.0 || b <= 0.0 || c <= 0.0 {
            return Err(EktfError::Config(
                "split fractions must all be positive".into(),
            ));
        }
        if (a + b + c - 1.0).abs() > 1e-9 {
            return Err(EktfError::Config(format!(
                "split fractions must sum to 1, got {}",
                a + b + c
            )));
        }
        let n = self.num_rows();
        let mut order: Vec<u32> = (0..n as u32).collect();
        Rng::seed_from(seed).shuffle(&mut order);
        let n_train = (n as f64 * a).floor() as usize;
        let n_val = (n as f64 * b).floor() as usize;
        let train = self.subset(&order[..n_train]);
        let val = self.subset(&order[n_train..n_train + n_val]);
        let test = self.subset(&order[n_train + n_val..]);
        Ok((train, val, test))
    }

    fn subset(&self, indices: &[u32]) -> EncodedDataset {
        let f = self.num_fields();
        let mut rows = Vec::with_capacity(indices.len() * f);
        let mut labels = Vec::with_capacity(indices.len());
        let mut true_ctr = self.true_ctr.as_ref().map(|_| Vec::with_capacity(indices.len()));
        for &i in indices {
            rows.extend_from_slice(self.row(i as usize));
            labels.push(self.labels[i as usize]);
            if let (Some(out), Some(src)) = (&mut true_ctr, &self.true_ctr) {
                out.push(src[i as usize]);
            }
        }
        EncodedDataset {
            schema: self.schema.clone(),
            vocab_sizes: self.vocab_sizes.clone(),
            rows,
            labels,
            true_ctr,
        }
    }

    /// Iterate over mini-batches. `shuffle_seed = None` keeps file order;
    /// otherwise the row order is a seeded permutation. Every row appears
    /// exactly once; the final short batch is kept.
    pub fn batches(&self, batch_size: usize, shuffle_seed: Option<u64>) -> BatchIter<'_> {
        assert!(batch_size >= 1, "batch size must be >= 1");
        let mut order: Vec<u32> = (0..self.num_rows() as u32).collect();
        if let Some(seed) = shuffle_seed {
            Rng::seed_from(seed).shuffle(&mut order);
        }
        BatchIter {
            dataset: self,
            order,
            batch_size,
            cursor: 0,
        }
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.push(u8::from(self.true_ctr.is_some()));
        out.extend_from_slice(&(self.num_rows() as u64).to_le_bytes());
        out.extend_from_slice(&(self.num_fields() as u32).to_le_bytes());
        write_str(&mut out, &self.schema.label_column);
        for field in &self.schema.fields {
            write_str(&mut out, &field.name);
            out.push(match field.kind {
                FieldKind::Categorical => 0,
                FieldKind::Numeric => 1,
            });
            out.push(match field.role {
                FieldRole::User => 0,
                FieldRole::Item => 1,
                FieldRole::Context => 2,
            });
        }
        for &s in &self.vocab_sizes {
            out.extend_from_slice(&s.to_le_bytes());
        }
        for &id in &self.rows {
            out.extend_from_slice(&id.to_le_bytes());
        }
        out.extend_from_slice(&self.labels);
        if let Some(ctr) = &self.true_ctr {
            for &p in ctr {
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load_cache(path: &Path) -> Result<EncodedDataset> {
        let bytes = std::fs::read(path)?;
        let mut r = ByteReader::new(&bytes, "dataset cache");
        let magic = r.take(4)?;
        if magic != CACHE_MAGIC {
            return Err(EktfError::Data(format!(
                "{} is not a dataset cache (bad magic)",
                path.display()
            )));
        }
        let version = r.take_u32()?;
        if version != CACHE_VERSION {
            return Err(EktfError::Data(format!(
                "dataset cache version {version} unsupported (expected {CACHE_VERSION})"
            )));
        }
        let has_ctr = r.take(1)?[0] != 0;
        let n = r.take_u64()? as usize;
        let f = r.take_u32()? as usize;
        let label_column = r.take_str()?;
        let mut fields = Vec::with_capacity(f);
        for _ in 0..f {
            let name = r.take_str()?;
            let kind = match r.take(1)?[0] {
                0 => FieldKind::Categorical,
                1 => FieldKind::Numeric,
                k => return Err(EktfError::Data(format!("bad field kind tag {k}"))),
            };
            let role = match r.take(1)?[0] {
                0 => FieldRole::User,
                1 => FieldRole::Item,
                2 => FieldRole::Context,
                t => return Err(EktfError::Data(format!("bad field role tag {t}"))),
            };
            fields.push(FieldDef { name, kind, role });
        }
        let mut vocab_sizes = Vec::with_capacity(f);
        for _ in 0..f {
            vocab_sizes.push(r.take_u32()?);
        }
        let mut rows = Vec::with_capacity(n * f);
        for _ in 0..n * f {
            rows.push(r.take_u32()?);
        }
        let labels = r.take(n)?.to_vec();
        let true_ctr = if has_ctr {
            let mut ctr = Vec::with_capacity(n);
            for _ in 0..n {
                ctr.push(r.take_f64()?);
            }
            Some(ctr)
        } else {
            None
        };
        r.finish()?;
        let schema = FeatureSchema::new(fields, label_column)?;
        EncodedDataset::new(schema, vocab_sizes, rows, labels, true_ctr)
    }
}

const CACHE_MAGIC: &[u8; 4] = b"EKDS";
const CACHE_VERSION: u32 = 1;

/// One mini-batch: `ids` is row-major B x f, labels as f64 for loss math.
#[derive(Clone, Debug)]
pub struct Batch {
    pub ids: Vec<u32>,
    pub y: Vec<f64>,
    pub num_fields: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn sample_ids(&self, i: usize) -> &[u32] {
        &self.ids[i * self.num_fields..(i + 1) * self.num_fields]
    }
}

pub struct BatchIter<'a> {
    dataset: &'a EncodedDataset,
    order: Vec<u32>,
    batch_size: usize,
    cursor: usize,
}

impl Iterator for BatchIter<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let batch = self.dataset.gather(&self.order[self.cursor..end]);
        self.cursor = end;
        Some(batch)
    }
}
