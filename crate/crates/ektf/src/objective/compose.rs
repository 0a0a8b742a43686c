//! Composition of the loss variants, with exact gradients w.r.t. every
//! student logit (and the concat head when it participates).
//!
//! Gradient semantics are defined by a per-batch context: examination
//! weights are constants of the batch (no gradient through softmin /
//! softmax), and under stop-gradient the distillation teacher and mutual
//! peers are frozen copies. `batch_context` captures those constants;
//! `total_loss_in_context` evaluates loss and gradients against them, so a
//! finite-difference probe that re-runs it with perturbed outputs but the
//! same context measures exactly the derivative the training step uses.

use super::exam::{exam_scores, mu_rows, softmin_lambda, ExamWeights};
use super::fusion::{fuse, mean_teacher};
use super::loss::{ctr_grad_prob, ctr_loss, dml_loss, kd_loss};
use super::{Fusion, ObjectiveSpec, StudentOutputs, Variant};
use crate::error::{EktfError, Result};
use crate::numkit::matrix::Matrix;

/// Constants of one batch's loss evaluation.
#[derive(Clone, Debug)]
pub struct BatchContext {
    pub weights: ExamWeights,
    /// Frozen distillation target; `Some` iff stop-gradient applies and the
    /// variant distills.
    pub frozen_teacher: Option<Vec<f64>>,
    /// Frozen peer targets; `Some` iff stop-gradient applies and the
    /// variant has a mutual term.
    pub frozen_probs: Option<Vec<Vec<f64>>>,
}

/// Capture examination weights and stop-gradient targets for one batch.
pub fn batch_context(spec: &ObjectiveSpec, outputs: &StudentOutputs, y: &[f64]) -> BatchContext {
    let k = outputs.num_students();
    let scores = exam_scores(&outputs.probs, y);
    let weights = if spec.use_exam {
        ExamWeights {
            lambda: softmin_lambda(&scores),
            mu: mu_rows(&scores),
            scores,
        }
    } else {
        let lambda = vec![1.0 / k as f64; k];
        let fill = if k < 2 {
            0.0
        } else if spec.mu_one_over_k {
            1.0 / k as f64
        } else {
            1.0 / (k - 1) as f64
        };
        let mu = (0..k)
            .map(|a| {
                (0..k)
                    .map(|l| if l == a { 0.0 } else { fill })
                    .collect()
            })
            .collect();
        ExamWeights { scores, lambda, mu }
    };
    let needs_kd = matches!(spec.variant, Variant::KdCtr | Variant::Ektf);
    let needs_dml = matches!(spec.variant, Variant::DmlCtr | Variant::Ektf);
    let frozen_teacher = (spec.stop_gradient_targets && needs_kd)
        .then(|| mean_teacher(&outputs.probs));
    let frozen_probs =
        (spec.stop_gradient_targets && needs_dml).then(|| outputs.probs.clone());
    BatchContext {
        weights,
        frozen_teacher,
        frozen_probs,
    }
}

/// Losses, logging detail, and gradients for one batch.
#[derive(Clone, Debug)]
pub struct LossBreakdown {
    pub total: f64,
    /// L_CTR of each student's own prediction (logged for every variant).
    pub ctr_per_student: Vec<f64>,
    /// L_CTR of the fused / teacher prediction where the variant trains it.
    pub ensemble_ctr: Option<f64>,
    pub kd_per_student: Vec<f64>,
    pub dml_per_student: Vec<f64>,
    pub scores: Vec<f64>,
    pub lambda: Vec<f64>,
    /// dL/dlogit per student, length K x B.
    pub dlogits: Vec<Vec<f64>>,
    /// Gradients for the concat head (weights, bias) when it participates.
    pub dconcat: Option<(Matrix, Matrix)>,
}

/// One-call form: capture the context from the current outputs and compose.
pub fn total_loss(
    spec: &ObjectiveSpec,
    outputs: &StudentOutputs,
    y: &[f64],
    concat_head: Option<(&Matrix, &Matrix)>,
) -> Result<LossBreakdown> {
    let ctx = batch_context(spec, outputs, y);
    total_loss_in_context(spec, outputs, y, &ctx, concat_head)
}

/// Compose the configured variant against a fixed batch context.
pub fn total_loss_in_context(
    spec: &ObjectiveSpec,
    outputs: &StudentOutputs,
    y: &[f64],
    ctx: &BatchContext,
    concat_head: Option<(&Matrix, &Matrix)>,
) -> Result<LossBreakdown> {
    let k = outputs.num_students();
    let b = outputs.batch_size();
    if k == 0 {
        return Err(EktfError::Config("objective needs at least one student".into()));
    }
    if y.len() != b {
        return Err(EktfError::Shape(format!(
            "batch has {b} predictions but {} labels",
            y.len()
        )));
    }
    let n = b as f64;
    let kf = k as f64;
    let probs = &outputs.probs;
    let logits = &outputs.logits;
    let lambda = &ctx.weights.lambda;
    let mu = &ctx.weights.mu;

    let ctr_per: Vec<f64> = probs.iter().map(|p| ctr_loss(p, y)).collect();

    let mut dprobs = vec![vec![0.0; b]; k];
    // Sum/concat fusion produces logit-space gradients directly.
    let mut dlogits = vec![vec![0.0; b]; k];
    let mut dconcat = None;
    let mut ensemble_ctr = None;
    let mut kd_per = vec![0.0; k];
    let mut dml_per = vec![0.0; k];

    let total = match spec.variant {
        Variant::Vanilla => {
            let fused = fuse(outputs, spec.fusion, concat_head)?;
            let l = ctr_loss(&fused.y_hat, y);
            ensemble_ctr = Some(l);
            match spec.fusion {
                Fusion::Mean => {
                    for i in 0..b {
                        let g = ctr_grad_prob(fused.y_hat[i], y[i], n) / kf;
                        for dk in dprobs.iter_mut() {
                            dk[i] += g;
                        }
                    }
                }
                Fusion::Sum => {
                    for i in 0..b {
                        let p = fused.y_hat[i];
                        let gz = ctr_grad_prob(p, y[i], n) * p * (1.0 - p);
                        for dk in dlogits.iter_mut() {
                            dk[i] += gz;
                        }
                    }
                }
                Fusion::Concat => {
                    let (w, _) = concat_head.expect("fuse validated the head");
                    let mut dw = Matrix::zeros(k, 1);
                    let mut db = Matrix::zeros(1, 1);
                    for i in 0..b {
                        let p = fused.y_hat[i];
                        let gz = ctr_grad_prob(p, y[i], n) * p * (1.0 - p);
                        for kk in 0..k {
                            dlogits[kk][i] += w.at(kk, 0) * gz;
                            *dw.at_mut(kk, 0) += logits[kk][i] * gz;
                        }
                        *db.at_mut(0, 0) += gz;
                    }
                    dconcat = Some((dw, db));
                }
            }
            l
        }
        Variant::KdCtr => {
            let t_live = mean_teacher(probs);
            let teacher_l = ctr_loss(&t_live, y);
            ensemble_ctr = Some(teacher_l);
            let target = ctx.frozen_teacher.as_ref().unwrap_or(&t_live);
            let (kd_total, per) = kd_loss(probs, target, lambda);
            kd_per = per;
            // The teacher's CTR loss trains every student through the mean.
            for i in 0..b {
                let g = ctr_grad_prob(t_live[i], y[i], n) / kf;
                for dk in dprobs.iter_mut() {
                    dk[i] += g;
                }
            }
            add_kd_grads(
                &mut dprobs,
                probs,
                target,
                lambda,
                n,
                spec.stop_gradient_targets,
            );
            teacher_l + kd_total
        }
        Variant::DmlCtr => {
            let targets = ctx.frozen_probs.as_ref().unwrap_or(probs);
            let (_, per) = dml_loss(probs, targets, mu);
            dml_per = per;
            for (dk, (pk, _)) in dprobs.iter_mut().zip(probs.iter().zip(&ctr_per)) {
                for i in 0..b {
                    dk[i] += ctr_grad_prob(pk[i], y[i], n);
                }
            }
            add_dml_grads(
                &mut dprobs,
                probs,
                targets,
                mu,
                n,
                spec.stop_gradient_targets,
                1.0,
            );
            ctr_per.iter().sum::<f64>() + dml_per.iter().sum::<f64>()
        }
        Variant::Ektf => {
            let t_live = mean_teacher(probs);
            let target = ctx.frozen_teacher.as_ref().unwrap_or(&t_live);
            let (kd_total, per) = kd_loss(probs, target, lambda);
            kd_per = per;
            let targets = ctx.frozen_probs.as_ref().unwrap_or(probs);
            let (dml_avg, dper) = dml_loss(probs, targets, mu);
            dml_per = dper;
            let ctr_avg = ctr_per.iter().sum::<f64>() / kf;

            for (dk, pk) in dprobs.iter_mut().zip(probs) {
                for i in 0..b {
                    dk[i] += ctr_grad_prob(pk[i], y[i], n) / kf;
                }
            }
            let mut t = ctr_avg + kd_total + dml_avg;
            if spec.add_teacher_ctr {
                let tl = ctr_loss(&t_live, y);
                ensemble_ctr = Some(tl);
                t += tl;
                for i in 0..b {
                    let g = ctr_grad_prob(t_live[i], y[i], n) / kf;
                    for dk in dprobs.iter_mut() {
                        dk[i] += g;
                    }
                }
            }
            add_kd_grads(
                &mut dprobs,
                probs,
                target,
                lambda,
                n,
                spec.stop_gradient_targets,
            );
            add_dml_grads(
                &mut dprobs,
                probs,
                targets,
                mu,
                n,
                spec.stop_gradient_targets,
                1.0 / kf,
            );
            t
        }
    };

    // Chain probability-space gradients to logit space.
    for ((dk, dz), pk) in dprobs.iter().zip(dlogits.iter_mut()).zip(probs) {
        for i in 0..b {
            let p = pk[i];
            dz[i] += dk[i] * p * (1.0 - p);
        }
    }

    Ok(LossBreakdown {
        total,
        ctr_per_student: ctr_per,
        ensemble_ctr,
        kd_per_student: kd_per,
        dml_per_student: dml_per,
        scores: ctx.weights.scores.clone(),
        lambda: lambda.clone(),
        dlogits,
        dconcat,
    })
}

/// d(sum_k L_KD^k)/d(probs); `target` is frozen under stop-gradient, the
/// live teacher otherwise (in which case the mean's own derivative flows).
fn add_kd_grads(
    dprobs: &mut [Vec<f64>],
    probs: &[Vec<f64>],
    target: &[f64],
    lambda: &[f64],
    n: f64,
    stop_grad: bool,
) {
    let k = probs.len();
    let kf = k as f64;
    let b = target.len();
    for kk in 0..k {
        let lam = lambda[kk];
        for i in 0..b {
            dprobs[kk][i] += 2.0 * lam * (probs[kk][i] - target[i]) / n;
        }
    }
    if !stop_grad {
        for i in 0..b {
            let mut common = 0.0;
            for kk in 0..k {
                common += lambda[kk] * (target[i] - probs[kk][i]);
            }
            let g = 2.0 * common / (n * kf);
            for dk in dprobs.iter_mut() {
                dk[i] += g;
            }
        }
    }
}

/// d(coeff * sum_k L_DML^k)/d(probs); `targets` frozen under stop-gradient.
fn add_dml_grads(
    dprobs: &mut [Vec<f64>],
    probs: &[Vec<f64>],
    targets: &[Vec<f64>],
    mu: &[Vec<f64>],
    n: f64,
    stop_grad: bool,
    coeff: f64,
) {
    let k = probs.len();
    if k < 2 {
        return;
    }
    let b = probs[0].len();
    for a in 0..k {
        for l in 0..k {
            if l == a {
                continue;
            }
            let w = coeff * mu[a][l];
            if w == 0.0 {
                continue;
            }
            for i in 0..b {
                dprobs[a][i] += 2.0 * w * (probs[a][i] - targets[l][i]) / n;
            }
        }
    }
    if !stop_grad {
        for a in 0..k {
            for l in 0..k {
                if l == a {
                    continue;
                }
                let w = coeff * mu[a][l];
                if w == 0.0 {
                    continue;
                }
                for i in 0..b {
                    dprobs[l][i] += 2.0 * w * (targets[l][i] - probs[a][i]) / n;
                }
            }
        }
    }
}
