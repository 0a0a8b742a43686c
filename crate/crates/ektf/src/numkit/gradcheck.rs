//! Finite-difference gradient verification.
//!
//! Central differences with a scale-aware step, plus the relative-error
//! metric the model tests assert on. Lives in the library (not test code)
//! so the runnable examples can demonstrate it too.

/// Central-difference derivative of `f` at x[i], perturbing only that entry.
pub fn central_diff<F>(f: &mut F, x: &mut [f64], i: usize, h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let orig = x[i];
    x[i] = orig + h;
    let fp = f(x);
    x[i] = orig - h;
    let fm = f(x);
    x[i] = orig;
    (fp - fm) / (2.0 * h)
}

/// |analytic - numeric| / max(1, |numeric|): absolute near zero, relative
/// for large values.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1.0)
}

/// Compare an analytic gradient against central differences, entry by entry.
/// Returns the worst relative error and its index.
pub fn check_gradient<F>(
    f: &mut F,
    x: &mut [f64],
    analytic: &[f64],
    h: f64,
) -> (f64, usize)
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x.len(), analytic.len());
    let mut worst = 0.0;
    let mut worst_idx = 0;
    for i in 0..x.len() {
        let numeric = central_diff(f, x, i, h);
        let err = relative_error(analytic[i], numeric);
        if err > worst {
            worst = err;
            worst_idx = i;
        }
    }
    (worst, worst_idx)
}
