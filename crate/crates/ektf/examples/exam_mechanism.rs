//! The examination mechanism: score each student's accuracy on the current
//! batch, then turn the scores into transfer-loss weights — soft-minimum
//! weights send more distillation pressure to weaker students, while each
//! student's peer weights favor stronger peers.
//!
//! Run with: `cargo run --example exam_mechanism`

use ektf::objective::{exam_scores, mu_rows, softmin_lambda};

fn print_vec(label: &str, v: &[f64]) {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    println!("{label:<24}[{}]", cells.join(", "));
}

fn main() {
    // One batch of four labels and three students of clearly different
    // quality: student 0 is confident and right, student 2 is nearly
    // guessing, student 1 sits in between.
    let y = [1.0, 0.0, 1.0, 0.0];
    let probs = vec![
        vec![0.9, 0.1, 0.8, 0.2],
        vec![0.7, 0.4, 0.6, 0.4],
        vec![0.5, 0.5, 0.5, 0.6],
    ];

    // Score = batch mean of 1 - |y - p|, i.e. average closeness to the label.
    let scores = exam_scores(&probs, &y);
    print_vec("accuracy scores:", &scores);

    // Distillation weights: soft-MINIMUM of the scores, so the weakest
    // student is pulled hardest toward the shared teacher.
    let lambda = softmin_lambda(&scores);
    print_vec("distillation weights:", &lambda);
    assert!(lambda[2] > lambda[1] && lambda[1] > lambda[0]);
    println!("  -> weakest student (2) gets the largest distillation weight\n");

    // Peer weights: each row k is a softmax over the OTHER students'
    // scores, so everyone listens mostly to the strongest peer.
    let mu = mu_rows(&scores);
    for (k, row) in mu.iter().enumerate() {
        print_vec(&format!("peer weights for {k}:"), row);
    }
    println!("  -> each student leans toward its strongest available peer\n");

    // Both mappings are simplex-valued and shift-invariant: adding a
    // constant to every score changes nothing.
    let total: f64 = lambda.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let shifted: Vec<f64> = scores.iter().map(|s| s + 0.25).collect();
    assert_eq!(softmin_lambda(&shifted), lambda);
    println!("weights sum to 1 and are invariant to shifting all scores.");

    // Equal scores collapse to uniform weights exactly.
    let equal = [0.75, 0.75, 0.75];
    print_vec("\nequal scores ->", &softmin_lambda(&equal));
    print_vec("equal peer row 0 ->", &mu_rows(&equal)[0]);
    println!("  -> exactly 1/K and 1/(K-1): no examination signal, no preference");
}
