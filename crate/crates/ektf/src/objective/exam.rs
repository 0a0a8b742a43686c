//! The examination mechanism: score each student's accuracy on the batch,
//! then turn scores into teaching weights (softmin: weaker students get
//! more distillation) and peer-trust weights (softmax: stronger peers get
//! more attention).

use super::StudentOutputs;

/// Per-batch examination result.
#[derive(Clone, Debug)]
pub struct ExamWeights {
    /// S[k]: batch-mean of 1 - |y_i - p_{k,i}|; higher = more accurate.
    pub scores: Vec<f64>,
    /// lambda[k]: distillation weight, softmin over scores; sums to 1.
    pub lambda: Vec<f64>,
    /// mu[k][l]: trust of student k in peer l, softmax over S_l (l != k);
    /// each row sums to 1 (K >= 2); diagonal is 0.
    pub mu: Vec<Vec<f64>>,
}

/// S_k = (1/N) * sum_i (1 - |y_i - p_{k,i}|).
pub fn exam_scores(probs: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    probs
        .iter()
        .map(|pk| {
            let acc: f64 = pk.iter().zip(y).map(|(&p, &yi)| 1.0 - (yi - p).abs()).sum();
            acc / n
        })
        .collect()
}

/// Softmin over scores: lambda_k = exp(-S_k) / sum_l exp(-S_l).
///
/// Shifted by the minimum score so equal scores produce exactly 1/K and no
/// exponent overflows.
pub fn softmin_lambda(scores: &[f64]) -> Vec<f64> {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let exps: Vec<f64> = scores.iter().map(|&s| (min - s).exp()).collect();
    let denom: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / denom).collect()
}

/// Row k is the softmax of peer scores S_l over l != k. The S_k offset in
/// the printed form softmax(S_l - S_k) cancels in the normalization, so it
/// is omitted; shifting by the row maximum keeps equal scores exactly at
/// 1/(K-1).
pub fn mu_rows(scores: &[f64]) -> Vec<Vec<f64>> {
    let k = scores.len();
    let mut mu = vec![vec![0.0; k]; k];
    if k < 2 {
        return mu;
    }
    for a in 0..k {
        let max = scores
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != a)
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for l in 0..k {
            if l == a {
                continue;
            }
            let e = (scores[l] - max).exp();
            mu[a][l] = e;
            denom += e;
        }
        for l in 0..k {
            if l != a {
                mu[a][l] /= denom;
            }
        }
    }
    mu
}

/// Score the batch and derive both weight families.
pub fn exam_weights(outputs: &StudentOutputs, y: &[f64]) -> ExamWeights {
    let scores = exam_scores(&outputs.probs, y);
    let lambda = softmin_lambda(&scores);
    let mu = mu_rows(&scores);
    ExamWeights { scores, lambda, mu }
}
