//! The training objective: fusion functions, CTR / distillation / mutual
//! losses, per-batch examination weights, and their composition into the
//! four trainable variants with exact logit gradients.

pub mod compose;
pub mod exam;
pub mod fusion;
pub mod loss;

use serde::{Deserialize, Serialize};

/// Per-student predictions for one batch: `probs[k][i] = sigmoid(logits[k][i])`.
#[derive(Clone, Debug)]
pub struct StudentOutputs {
    pub logits: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
}

impl StudentOutputs {
    pub fn from_logits(logits: Vec<Vec<f64>>) -> Self {
        let probs = logits
            .iter()
            .map(|row| row.iter().map(|&z| crate::numkit::sigmoid(z)).collect())
            .collect();
        StudentOutputs { logits, probs }
    }

    pub fn num_students(&self) -> usize {
        self.probs.len()
    }

    pub fn batch_size(&self) -> usize {
        self.probs.first().map_or(0, |p| p.len())
    }
}

/// How the K student predictions become one ensemble prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// Average of probabilities (also the distillation teacher).
    Mean,
    /// Sum of logits, then sigmoid.
    Sum,
    /// Learned linear head over the K logits, then sigmoid.
    Concat,
}

/// Which loss composition trains the ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One CTR loss on the fused prediction.
    Vanilla,
    /// Teacher CTR plus weighted student-to-teacher distillation.
    KdCtr,
    /// Per-student CTR plus weighted peer-to-peer mutual learning.
    DmlCtr,
    /// Averaged student CTR + distillation + averaged mutual learning.
    Ektf,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSpec {
    pub variant: Variant,
    /// Weight transfer losses by per-batch accuracy scores instead of
    /// uniform 1/K and 1/(K-1).
    pub use_exam: bool,
    /// Fusion for the vanilla variant's trained (and evaluated) prediction.
    pub fusion: Fusion,
    /// Treat MSE targets (teacher, peers) as constants when differentiating.
    pub stop_gradient_targets: bool,
    /// With `use_exam = false`, weight each peer 1/K instead of 1/(K-1)
    /// (rows then sum to (K-1)/K rather than 1).
    pub mu_one_over_k: bool,
    /// Add the teacher's CTR loss to the combined variant.
    pub add_teacher_ctr: bool,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            variant: Variant::Ektf,
            use_exam: true,
            fusion: Fusion::Mean,
            stop_gradient_targets: true,
            mu_one_over_k: false,
            add_teacher_ctr: false,
        }
    }
}

pub use compose::{
    batch_context, total_loss, total_loss_in_context, BatchContext, LossBreakdown,
};
pub use exam::{exam_scores, exam_weights, mu_rows, softmin_lambda, ExamWeights};
pub use fusion::{eval_prediction, fuse, mean_teacher, EnsembleOutput};
pub use loss::{clamp_prob, ctr_grad_prob, ctr_loss, dml_loss, kd_loss, PROB_EPS};
