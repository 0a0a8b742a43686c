//! Scalar loss terms: clamped binary cross-entropy, teacher-target MSE
//! (distillation), and peer-target MSE (mutual learning).

/// Probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before logs.
pub const PROB_EPS: f64 = 1e-7;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Mean binary cross-entropy over the batch. Labels must be 0.0 or 1.0.
pub fn ctr_loss(y_hat: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(y_hat.len(), y.len());
    let n = y_hat.len() as f64;
    let mut acc = 0.0;
    for (&p, &yi) in y_hat.iter().zip(y) {
        let pc = clamp_prob(p);
        acc += if yi > 0.5 { -pc.ln() } else { -(1.0 - pc).ln() };
    }
    acc / n
}

/// d(ctr_loss)/d(y_hat_i), respecting the clamp: where the probability sits
/// in the clamped region the loss is locally constant, so the gradient is 0.
pub fn ctr_grad_prob(p: f64, yi: f64, n: f64) -> f64 {
    if p <= PROB_EPS || p >= 1.0 - PROB_EPS {
        return 0.0;
    }
    (p - yi) / (p * (1.0 - p)) / n
}

/// Student-to-teacher MSE, weighted per student.
///
/// per_student[k] = (lambda[k] / N) * sum_i (teacher[i] - probs[k][i])^2.
/// Returns (sum over students, per-student values).
pub fn kd_loss(probs: &[Vec<f64>], teacher: &[f64], lambda: &[f64]) -> (f64, Vec<f64>) {
    debug_assert_eq!(probs.len(), lambda.len());
    let n = teacher.len() as f64;
    let per: Vec<f64> = probs
        .iter()
        .zip(lambda)
        .map(|(pk, &lam)| {
            let sq: f64 = pk
                .iter()
                .zip(teacher)
                .map(|(&p, &t)| (t - p) * (t - p))
                .sum();
            lam * sq / n
        })
        .collect();
    (per.iter().sum(), per)
}

/// Peer-to-peer MSE, weighted per peer.
///
/// per_student[k] = sum_{l != k} mu[k][l] * (1/N) * sum_i (targets[l][i] - probs[k][i])^2.
/// `targets` is usually `probs` itself, or a frozen copy under
/// stop-gradient semantics. Returns (mean over students, per-student values);
/// compositions that need the unaveraged sum use the per-student list.
pub fn dml_loss(probs: &[Vec<f64>], targets: &[Vec<f64>], mu: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let k = probs.len();
    debug_assert_eq!(targets.len(), k);
    debug_assert_eq!(mu.len(), k);
    if k == 0 {
        return (0.0, Vec::new());
    }
    let n = probs[0].len() as f64;
    let mut per = Vec::with_capacity(k);
    for a in 0..k {
        let mut acc = 0.0;
        for b in 0..k {
            if b == a {
                continue;
            }
            let w = mu[a][b];
            if w == 0.0 {
                continue;
            }
            let sq: f64 = probs[a]
                .iter()
                .zip(&targets[b])
                .map(|(&p, &t)| (t - p) * (t - p))
                .sum();
            acc += w * sq / n;
        }
        per.push(acc);
    }
    (per.iter().sum::<f64>() / k as f64, per)
}
