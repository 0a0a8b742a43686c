//! Check the objective's analytic logit gradients against central finite
//! differences for every trainable composition.
//!
//! The per-batch examination weights and any stop-gradient targets are
//! frozen before probing, so the numeric derivative measures exactly the
//! quantity a training step uses.
//!
//! Run with: `cargo run --example gradient_check`

use ektf::numkit::check_gradient;
use ektf::objective::{
    batch_context, total_loss_in_context, Fusion, ObjectiveSpec, StudentOutputs, Variant,
};

fn main() -> ektf::Result<()> {
    // Three students, four examples: enough to exercise every coupling.
    let logits = vec![
        vec![0.3, -0.8, 1.2, 0.1],
        vec![-0.5, 0.9, -0.2, 0.7],
        vec![1.1, -0.3, 0.4, -0.9],
    ];
    let y = [1.0, 0.0, 1.0, 0.0];

    let variants = [
        (Variant::Vanilla, Fusion::Mean),
        (Variant::Vanilla, Fusion::Sum),
        (Variant::KdCtr, Fusion::Mean),
        (Variant::DmlCtr, Fusion::Mean),
        (Variant::Ektf, Fusion::Mean),
    ];

    println!("{:<28}{:>10}{:>22}", "objective", "exam", "worst rel. error");
    let mut worst_overall = 0.0_f64;
    for (variant, fusion) in variants {
        for use_exam in [false, true] {
            let spec = ObjectiveSpec {
                variant,
                fusion,
                use_exam,
                ..ObjectiveSpec::default()
            };
            let outputs = StudentOutputs::from_logits(logits.clone());
            // Freeze the batch context at the unperturbed outputs, exactly
            // as one optimizer step would.
            let ctx = batch_context(&spec, &outputs, &y);

            let breakdown = total_loss_in_context(&spec, &outputs, &y, &ctx, None)?;
            let analytic: Vec<f64> = breakdown.dlogits.iter().flatten().copied().collect();

            let mut flat: Vec<f64> = logits.iter().flatten().copied().collect();
            let mut loss_at = |x: &[f64]| {
                let probe: Vec<Vec<f64>> = x.chunks(y.len()).map(<[f64]>::to_vec).collect();
                let probe = StudentOutputs::from_logits(probe);
                total_loss_in_context(&spec, &probe, &y, &ctx, None)
                    .expect("probe loss")
                    .total
            };
            let (worst, at) = check_gradient(&mut loss_at, &mut flat, &analytic, 1e-5);
            worst_overall = worst_overall.max(worst);
            println!(
                "{:<28}{:>10}{:>18.3e}  (coordinate {at})",
                format!("{variant:?} / {fusion:?}"),
                use_exam,
                worst
            );
        }
    }

    println!("\nworst relative error overall: {worst_overall:.3e}");
    assert!(
        worst_overall < 1e-6,
        "analytic and numeric gradients disagree"
    );
    println!("analytic gradients match finite differences.");
    Ok(())
}
