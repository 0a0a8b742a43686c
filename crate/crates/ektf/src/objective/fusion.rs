//! Fusion functions: student predictions in, one ensemble prediction out.

use super::{Fusion, StudentOutputs, Variant};
use crate::error::{EktfError, Result};
use crate::numkit::matrix::Matrix;
use crate::numkit::sigmoid;

/// The fused prediction for one batch.
#[derive(Clone, Debug)]
pub struct EnsembleOutput {
    pub y_hat: Vec<f64>,
    pub fusion: Fusion,
}

/// Per-sample mean of student probabilities — the distillation teacher.
///
/// Computed in centered form, p_1 + mean(p_k - p_1), which equals the mean
/// algebraically but guarantees that K identical students produce a teacher
/// bitwise equal to them (so distillation terms vanish exactly, and the
/// K = 1 ensemble collapses to its single student with no rounding).
pub fn mean_teacher(probs: &[Vec<f64>]) -> Vec<f64> {
    let k = probs.len();
    let b = probs[0].len();
    let kf = k as f64;
    let mut t = Vec::with_capacity(b);
    for i in 0..b {
        let p1 = probs[0][i];
        let mut acc = 0.0;
        for pk in probs {
            acc += pk[i] - p1;
        }
        t.push(p1 + acc / kf);
    }
    t
}

/// Fuse the K student outputs. `concat_head` is (weights K x 1, bias 1 x 1),
/// required only for `Fusion::Concat`.
pub fn fuse(
    outputs: &StudentOutputs,
    fusion: Fusion,
    concat_head: Option<(&Matrix, &Matrix)>,
) -> Result<EnsembleOutput> {
    let k = outputs.num_students();
    let b = outputs.batch_size();
    let y_hat = match fusion {
        Fusion::Mean => mean_teacher(&outputs.probs),
        Fusion::Sum => (0..b)
            .map(|i| {
                let z: f64 = outputs.logits.iter().map(|row| row[i]).sum();
                sigmoid(z)
            })
            .collect(),
        Fusion::Concat => {
            let (w, bias) = concat_head.ok_or_else(|| {
                EktfError::Config("concat fusion requires an initialized head".into())
            })?;
            if w.rows() != k || w.cols() != 1 {
                return Err(EktfError::Shape(format!(
                    "concat head is {}x{}, expected {k}x1",
                    w.rows(),
                    w.cols()
                )));
            }
            (0..b)
                .map(|i| {
                    let mut z = bias.at(0, 0);
                    for (kk, row) in outputs.logits.iter().enumerate() {
                        z += w.at(kk, 0) * row[i];
                    }
                    sigmoid(z)
                })
                .collect()
        }
    };
    Ok(EnsembleOutput { y_hat, fusion })
}

/// The prediction a trained model is evaluated on: the configured fusion
/// for the vanilla variant, the mean teacher for every transfer variant.
pub fn eval_prediction(
    variant: Variant,
    fusion: Fusion,
    outputs: &StudentOutputs,
    concat_head: Option<(&Matrix, &Matrix)>,
) -> Result<Vec<f64>> {
    match variant {
        Variant::Vanilla => Ok(fuse(outputs, fusion, concat_head)?.y_hat),
        _ => Ok(mean_teacher(&outputs.probs)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outputs(logits: Vec<Vec<f64>>) -> StudentOutputs {
        StudentOutputs::from_logits(logits)
    }

    #[test]
    fn mean_fusion_averages_probs() {
        let out = StudentOutputs {
            logits: vec![vec![0.0], vec![0.0]],
            probs: vec![vec![0.2], vec![0.4]],
        };
        let fused = fuse(&out, Fusion::Mean, None).unwrap();
        assert!((fused.y_hat[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn identical_students_fuse_bitwise_to_themselves() {
        let p = vec![0.123456789012345, 0.9999999, 1e-9];
        let out = StudentOutputs {
            logits: vec![vec![0.0; 3]; 3],
            probs: vec![p.clone(), p.clone(), p.clone()],
        };
        let t = mean_teacher(&out.probs);
        assert_eq!(t, p);
    }

    #[test]
    fn single_student_is_its_own_ensemble() {
        let out = outputs(vec![vec![0.7, -1.1]]);
        for fusion in [Fusion::Mean, Fusion::Sum] {
            let fused = fuse(&out, fusion, None).unwrap();
            assert_eq!(fused.y_hat, out.probs[0]);
        }
    }

    #[test]
    fn sum_fusion_acts_on_logits() {
        let out = outputs(vec![vec![0.5], vec![-0.5]]);
        let fused = fuse(&out, Fusion::Sum, None).unwrap();
        assert_eq!(fused.y_hat[0], 0.5); // sigmoid(0)
    }

    #[test]
    fn concat_fusion_is_a_learned_combiner() {
        let out = outputs(vec![vec![1.0], vec![2.0]]);
        let w = Matrix::from_vec(2, 1, vec![0.25, 0.25]).unwrap();
        let b = Matrix::from_vec(1, 1, vec![0.25]).unwrap();
        let fused = fuse(&out, Fusion::Concat, Some((&w, &b))).unwrap();
        assert!((fused.y_hat[0] - sigmoid(1.0)).abs() < 1e-15);
    }

    #[test]
    fn concat_without_head_is_a_config_error() {
        let out = outputs(vec![vec![1.0]]);
        let err = fuse(&out, Fusion::Concat, None).unwrap_err();
        assert!(matches!(err, EktfError::Config(_)));
    }

    #[test]
    fn transfer_variants_evaluate_on_the_teacher() {
        let out = StudentOutputs {
            logits: vec![vec![0.0], vec![0.0]],
            probs: vec![vec![0.2], vec![0.6]],
        };
        let p = eval_prediction(Variant::Ektf, Fusion::Sum, &out, None).unwrap();
        assert!((p[0] - 0.4).abs() < 1e-15); // mean, not sum-of-logits
    }
}
