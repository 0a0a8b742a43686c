//! Per-field embedding tables and the gather/scatter pair that connects
//! integer feature ids to dense network inputs.

use crate::data::Batch;
use crate::error::{EktfError, Result};
use crate::numkit::matrix::Matrix;
use crate::numkit::rng::Rng;

/// One embedding table per field; field i's table has that field's vocab
/// size rows and `dim` columns.
#[derive(Clone, Debug)]
pub struct EmbeddingBank {
    pub tables: Vec<Matrix>,
    pub dim: usize,
}

impl EmbeddingBank {
    pub fn init(vocab_sizes: &[u32], dim: usize, init_std: f64, rng: &mut Rng) -> Self {
        let tables = vocab_sizes
            .iter()
            .map(|&s| {
                let mut t = Matrix::zeros(s as usize, dim);
                for v in t.as_mut_slice() {
                    *v = rng.next_normal_scaled(init_std);
                }
                t
            })
            .collect();
        EmbeddingBank { tables, dim }
    }

    pub fn num_fields(&self) -> usize {
        self.tables.len()
    }

    /// Width of the concatenated output: fields x dim.
    pub fn output_dim(&self) -> usize {
        self.num_fields() * self.dim
    }

    /// Gather: row i of the result concatenates the embedding rows selected
    /// by sample i's ids, in field order.
    pub fn embed(&self, batch: &Batch) -> Result<Matrix> {
        let f = self.num_fields();
        if batch.num_fields != f {
            return Err(EktfError::Shape(format!(
                "batch has {} fields, bank has {f}",
                batch.num_fields
            )));
        }
        let b = batch.len();
        let d = self.dim;
        let mut h = Matrix::zeros(b, f * d);
        for i in 0..b {
            let ids = batch.sample_ids(i);
            let out = h.row_mut(i);
            for (j, &id) in ids.iter().enumerate() {
                let table = &self.tables[j];
                if (id as usize) >= table.rows() {
                    return Err(EktfError::Data(format!(
                        "id {id} out of range for field {j} (table rows {})",
                        table.rows()
                    )));
                }
                out[j * d..(j + 1) * d].copy_from_slice(table.row(id as usize));
            }
        }
        Ok(h)
    }

    /// Scatter-add: fold dL/dh back into per-table gradient matrices.
    /// Rows touched by several samples accumulate all contributions.
    pub fn backward(&self, batch: &Batch, dh: &Matrix) -> Vec<Matrix> {
        let d = self.dim;
        let mut grads: Vec<Matrix> = self
            .tables
            .iter()
            .map(|t| Matrix::zeros(t.rows(), t.cols()))
            .collect();
        for i in 0..batch.len() {
            let ids = batch.sample_ids(i);
            let drow = dh.row(i);
            for (j, &id) in ids.iter().enumerate() {
                let grow = grads[j].row_mut(id as usize);
                for (g, &v) in grow.iter_mut().zip(&drow[j * d..(j + 1) * d]) {
                    *g += v;
                }
            }
        }
        grads
    }
}
