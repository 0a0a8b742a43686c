//! The ensemble: K students over shared or private embedding banks, plus
//! the optional learned fusion head for concat fusion.

use super::embedding::EmbeddingBank;
use super::student::{StudentArch, StudentKind, StudentNet, StudentTrace};
use super::ParamMap;
use crate::data::{Batch, EncodedDataset};
use crate::error::{EktfError, Result};
use crate::numkit::matrix::Matrix;
use crate::numkit::rng::{derive_seed, Rng};
use crate::objective::StudentOutputs;

/// Architecture of the whole ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub students: Vec<StudentKind>,
    pub embedding_dim: usize,
    pub arch: StudentArch,
    /// One bank for all students, or a private bank per student (default).
    pub shared_embeddings: bool,
    /// Construct the learned concat-fusion head (needed only when training
    /// or evaluating with concat fusion).
    pub with_concat_head: bool,
}

/// Learned linear combiner over the K student logits.
#[derive(Clone, Debug)]
pub struct ConcatHead {
    /// K x 1 weights.
    pub w: Matrix,
    /// 1 x 1 bias.
    pub b: Matrix,
}

pub struct EnsembleModel {
    pub banks: Vec<EmbeddingBank>,
    pub students: Vec<StudentNet>,
    pub concat_head: Option<ConcatHead>,
    pub shared_embeddings: bool,
}

/// Everything forward caches for one batch; consumed by `backward`.
pub struct ForwardBundle {
    hs: Vec<Matrix>,
    traces: Vec<StudentTrace>,
}

impl EnsembleModel {
    /// Initialize with per-student parameter streams derived from `seed`.
    pub fn init(config: &EnsembleConfig, vocab_sizes: &[u32], seed: u64) -> Result<Self> {
        let k = config.students.len();
        let student_seeds: Vec<u64> = (1..=k as u64).map(|i| derive_seed(seed, i)).collect();
        Self::init_with_seeds(config, vocab_sizes, &student_seeds, derive_seed(seed, 0))
    }

    /// Initialize with explicit per-student seeds. Passing the same seed for
    /// every student makes all students start identical (used by tests and
    /// by the identical-student reductions).
    pub fn init_with_seeds(
        config: &EnsembleConfig,
        vocab_sizes: &[u32],
        student_seeds: &[u64],
        bank_seed: u64,
    ) -> Result<Self> {
        let k = config.students.len();
        if k == 0 {
            return Err(EktfError::Config("ensemble needs at least one student".into()));
        }
        if student_seeds.len() != k {
            return Err(EktfError::Config(format!(
                "{k} students but {} seeds",
                student_seeds.len()
            )));
        }
        if config.embedding_dim == 0 {
            return Err(EktfError::Config("embedding dimension must be > 0".into()));
        }
        let input_dim = vocab_sizes.len() * config.embedding_dim;

        let mut banks = Vec::new();
        let mut students = Vec::with_capacity(k);
        if config.shared_embeddings {
            let mut rng = Rng::seed_from(bank_seed);
            banks.push(EmbeddingBank::init(
                vocab_sizes,
                config.embedding_dim,
                config.arch.init_std,
                &mut rng,
            ));
            for (kind, &s) in config.students.iter().zip(student_seeds) {
                let mut rng = Rng::seed_from(s);
                students.push(StudentNet::init(*kind, input_dim, &config.arch, &mut rng)?);
            }
        } else {
            // Private mode: bank k and student k share one stream so that a
            // repeated seed reproduces the entire per-student parameter set.
            for (kind, &s) in config.students.iter().zip(student_seeds) {
                let mut rng = Rng::seed_from(s);
                banks.push(EmbeddingBank::init(
                    vocab_sizes,
                    config.embedding_dim,
                    config.arch.init_std,
                    &mut rng,
                ));
                students.push(StudentNet::init(*kind, input_dim, &config.arch, &mut rng)?);
            }
        }

        let concat_head = if config.with_concat_head {
            // Start as an even average of logits.
            let w = Matrix::from_vec(k, 1, vec![1.0 / k as f64; k])?;
            Some(ConcatHead {
                w,
                b: Matrix::zeros(1, 1),
            })
        } else {
            None
        };

        Ok(EnsembleModel {
            banks,
            students,
            concat_head,
            shared_embeddings: config.shared_embeddings,
        })
    }

    pub fn num_students(&self) -> usize {
        self.students.len()
    }

    pub fn forward(&self, batch: &Batch) -> Result<(StudentOutputs, ForwardBundle)> {
        let k = self.num_students();
        let mut hs = Vec::with_capacity(if self.shared_embeddings { 1 } else { k });
        if self.shared_embeddings {
            hs.push(self.banks[0].embed(batch)?);
        } else {
            for bank in &self.banks {
                hs.push(bank.embed(batch)?);
            }
        }
        let mut logits = Vec::with_capacity(k);
        let mut probs = Vec::with_capacity(k);
        let mut traces = Vec::with_capacity(k);
        for (i, student) in self.students.iter().enumerate() {
            let h = if self.shared_embeddings { &hs[0] } else { &hs[i] };
            let (z, p, trace) = student.forward(h);
            logits.push(z);
            probs.push(p);
            traces.push(trace);
        }
        Ok((StudentOutputs { logits, probs }, ForwardBundle { hs, traces }))
    }

    /// Backpropagate per-student logit gradients (and optional concat-head
    /// gradients) into a named gradient map.
    pub fn backward(
        &self,
        batch: &Batch,
        bundle: ForwardBundle,
        dlogits: &[Vec<f64>],
        dconcat: Option<(Matrix, Matrix)>,
    ) -> Result<ParamMap> {
        let k = self.num_students();
        if dlogits.len() != k {
            return Err(EktfError::Shape(format!(
                "{k} students but {} gradient rows",
                dlogits.len()
            )));
        }
        let ForwardBundle { hs, traces } = bundle;
        let mut grads = ParamMap::new();
        let mut shared_dh: Option<Matrix> = None;
        for (i, (student, trace)) in self.students.iter().zip(traces).enumerate() {
            let h = if self.shared_embeddings { &hs[0] } else { &hs[i] };
            let prefix = format!("student{}", i + 1);
            let dh = student.backward(h, trace, &dlogits[i], &prefix, &mut grads);
            if self.shared_embeddings {
                match &mut shared_dh {
                    Some(acc) => acc.add_assign(&dh),
                    None => shared_dh = Some(dh),
                }
            } else {
                for (j, g) in self.banks[i].backward(batch, &dh).into_iter().enumerate() {
                    grads.insert(format!("student{}.embed.field{j}", i + 1), g);
                }
            }
        }
        if let Some(dh) = shared_dh {
            for (j, g) in self.banks[0].backward(batch, &dh).into_iter().enumerate() {
                grads.insert(format!("shared.embed.field{j}"), g);
            }
        }
        match (&self.concat_head, dconcat) {
            (Some(_), Some((dw, db))) => {
                grads.insert("fusion.concat.w".to_string(), dw);
                grads.insert("fusion.concat.b".to_string(), db);
            }
            (None, Some(_)) => {
                return Err(EktfError::Config(
                    "concat-head gradients without a concat head".into(),
                ));
            }
            _ => {}
        }
        Ok(grads)
    }

    /// Full-dataset forward pass in file order, no parameter mutation.
    pub fn predict(&self, dataset: &EncodedDataset, batch_size: usize) -> Result<StudentOutputs> {
        let k = self.num_students();
        let n = dataset.num_rows();
        let mut logits = vec![Vec::with_capacity(n); k];
        let mut probs = vec![Vec::with_capacity(n); k];
        for batch in dataset.batches(batch_size, None) {
            let (out, _) = self.forward(&batch)?;
            for i in 0..k {
                logits[i].extend_from_slice(&out.logits[i]);
                probs[i].extend_from_slice(&out.probs[i]);
            }
        }
        Ok(StudentOutputs { logits, probs })
    }

    /// Deterministic parameter visitation: embeddings then network weights
    /// per student (or the shared bank first), concat head last.
    pub fn visit_params<'a>(&'a self, f: &mut dyn FnMut(String, &'a Matrix)) {
        if self.shared_embeddings {
            for (j, t) in self.banks[0].tables.iter().enumerate() {
                f(format!("shared.embed.field{j}"), t);
            }
        }
        for (i, student) in self.students.iter().enumerate() {
            if !self.shared_embeddings {
                for (j, t) in self.banks[i].tables.iter().enumerate() {
                    f(format!("student{}.embed.field{j}", i + 1), t);
                }
            }
            student.visit_params(&format!("student{}", i + 1), f);
        }
        if let Some(head) = &self.concat_head {
            f("fusion.concat.w".to_string(), &head.w);
            f("fusion.concat.b".to_string(), &head.b);
        }
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(String, &mut Matrix)) {
        if self.shared_embeddings {
            for (j, t) in self.banks[0].tables.iter_mut().enumerate() {
                f(format!("shared.embed.field{j}"), t);
            }
            for (i, student) in self.students.iter_mut().enumerate() {
                student.visit_params_mut(&format!("student{}", i + 1), f);
            }
        } else {
            for (i, (bank, student)) in
                self.banks.iter_mut().zip(self.students.iter_mut()).enumerate()
            {
                for (j, t) in bank.tables.iter_mut().enumerate() {
                    f(format!("student{}.embed.field{j}", i + 1), t);
                }
                student.visit_params_mut(&format!("student{}", i + 1), f);
            }
        }
        if let Some(head) = &mut self.concat_head {
            f("fusion.concat.w".to_string(), &mut head.w);
            f("fusion.concat.b".to_string(), &mut head.b);
        }
    }

    /// Clone all parameters as (name, values); the early-stopping snapshot.
    pub fn snapshot(&self) -> Vec<(String, Matrix)> {
        let mut out = Vec::new();
        self.visit_params(&mut |name, m| out.push((name, m.clone())));
        out
    }

    /// Restore a snapshot taken from an identically shaped model.
    pub fn restore(&mut self, snapshot: &[(String, Matrix)]) -> Result<()> {
        let map: std::collections::BTreeMap<&str, &Matrix> = snapshot
            .iter()
            .map(|(name, m)| (name.as_str(), m))
            .collect();
        let mut missing = Vec::new();
        self.visit_params_mut(&mut |name, m| match map.get(name.as_str()) {
            Some(src) if src.rows() == m.rows() && src.cols() == m.cols() => {
                m.as_mut_slice().copy_from_slice(src.as_slice());
            }
            _ => missing.push(name),
        });
        if !missing.is_empty() {
            return Err(EktfError::Shape(format!(
                "snapshot does not cover parameters: {}",
                missing.join(", ")
            )));
        }
        Ok(())
    }

    pub fn concat_head_ref(&self) -> Option<(&Matrix, &Matrix)> {
        self.concat_head.as_ref().map(|h| (&h.w, &h.b))
    }
}
