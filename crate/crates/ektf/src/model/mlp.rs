//! Feed-forward student: affine+ReLU hidden layers, affine scalar head.

use crate::error::{EktfError, Result};
use crate::numkit::matrix::{
    affine_backward, affine_forward, relu, relu_backward, Matrix,
};
use crate::numkit::rng::Rng;

#[derive(Clone, Debug)]
pub struct MlpNet {
    /// weights[j]: layer j input x output; the last layer outputs 1.
    pub weights: Vec<Matrix>,
    pub biases: Vec<Matrix>,
}

/// Cached pre-activations and activations; consumed by `backward`.
pub struct MlpTrace {
    /// pre_acts[j] = input_j @ w_j + b_j for every layer incl. the head.
    pre_acts: Vec<Matrix>,
    /// acts[j] = relu(pre_acts[j]) for hidden layers only.
    acts: Vec<Matrix>,
}

impl MlpNet {
    pub fn init(input_dim: usize, hidden: &[usize], init_std: f64, rng: &mut Rng) -> Result<Self> {
        if input_dim == 0 {
            return Err(EktfError::Config("MLP input dimension must be > 0".into()));
        }
        if hidden.iter().any(|&h| h == 0) {
            return Err(EktfError::Config("MLP hidden sizes must be > 0".into()));
        }
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let mut m = Matrix::zeros(w[0], w[1]);
            for v in m.as_mut_slice() {
                *v = rng.next_normal_scaled(init_std);
            }
            weights.push(m);
            biases.push(Matrix::zeros(1, w[1]));
        }
        Ok(MlpNet { weights, biases })
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Returns per-sample logits (length B) and the trace for backward.
    pub fn forward(&self, h: &Matrix) -> (Vec<f64>, MlpTrace) {
        let n_layers = self.num_layers();
        let mut pre_acts = Vec::with_capacity(n_layers);
        let mut acts: Vec<Matrix> = Vec::with_capacity(n_layers.saturating_sub(1));
        for j in 0..n_layers {
            let input: &Matrix = if j == 0 { h } else { &acts[j - 1] };
            let z = affine_forward(input, &self.weights[j], &self.biases[j]);
            if j + 1 < n_layers {
                acts.push(relu(&z));
            }
            pre_acts.push(z);
        }
        let logits = pre_acts.last().unwrap().as_slice().to_vec();
        (logits, MlpTrace { pre_acts, acts })
    }

    /// Gradients for every weight/bias plus dL/dh. `dlogit` has length B.
    pub fn backward(
        &self,
        h: &Matrix,
        trace: MlpTrace,
        dlogit: &[f64],
    ) -> (Vec<(Matrix, Matrix)>, Matrix) {
        let n_layers = self.num_layers();
        let b = dlogit.len();
        let mut dz = Matrix::from_vec(b, 1, dlogit.to_vec()).expect("dlogit length");
        let mut grads: Vec<(Matrix, Matrix)> = Vec::with_capacity(n_layers);
        for j in (0..n_layers).rev() {
            let input: &Matrix = if j == 0 { h } else { &trace.acts[j - 1] };
            let (dx, dw, db) = affine_backward(input, &self.weights[j], &dz);
            grads.push((dw, db));
            if j == 0 {
                grads.reverse();
                return (grads, dx);
            }
            dz = relu_backward(&trace.pre_acts[j - 1], &dx);
        }
        unreachable!("MLP always has at least one layer");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::gradcheck::{check_gradient, relative_error};
    use crate::numkit::sigmoid;

    #[test]
    fn zero_weights_give_half_probability() {
        let mut rng = Rng::seed_from(1);
        let mut net = MlpNet::init(3, &[4], 0.01, &mut rng).unwrap();
        for w in &mut net.weights {
            w.fill(0.0);
        }
        let h = Matrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]).unwrap();
        let (logits, _) = net.forward(&h);
        for z in logits {
            assert_eq!(sigmoid(z), 0.5);
        }
    }

    #[test]
    fn single_layer_reduces_to_affine() {
        let mut rng = Rng::seed_from(2);
        let net = MlpNet::init(2, &[], 0.3, &mut rng).unwrap();
        let h = Matrix::from_vec(2, 2, vec![1.0, 2.0, -0.5, 0.25]).unwrap();
        let (logits, _) = net.forward(&h);
        let want = affine_forward(&h, &net.weights[0], &net.biases[0]);
        assert_eq!(logits, want.as_slice());
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Loss = sum of logits squared over a tiny batch; check every
        // parameter of a 2-hidden-layer net across several seeds.
        for seed in 0..5 {
            let mut rng = Rng::seed_from(seed);
            let net = MlpNet::init(3, &[3, 2], 0.4, &mut rng).unwrap();
            let h = Matrix::from_vec(
                2,
                3,
                (0..6).map(|i| 0.3 * (i as f64 - 2.5)).collect(),
            )
            .unwrap();

            let (logits, trace) = net.forward(&h);
            let dlogit: Vec<f64> = logits.iter().map(|z| 2.0 * z).collect();
            let (grads, dh) = net.backward(&h, trace, &dlogit);

            // Check one full weight matrix per layer via the generic checker.
            for layer in 0..net.num_layers() {
                let analytic = grads[layer].0.as_slice().to_vec();
                let shape = (net.weights[layer].rows(), net.weights[layer].cols());
                let mut probe = net.weights[layer].as_slice().to_vec();
                let mut f = |theta: &[f64]| {
                    let mut candidate = net.clone();
                    candidate.weights[layer] =
                        Matrix::from_vec(shape.0, shape.1, theta.to_vec()).unwrap();
                    let (l, _) = candidate.forward(&h);
                    l.iter().map(|z| z * z).sum::<f64>()
                };
                let (worst, idx) = check_gradient(&mut f, &mut probe, &analytic, 1e-5);
                assert!(worst < 1e-6, "seed {seed} layer {layer} idx {idx}: {worst}");

                let banalytic = grads[layer].1.as_slice().to_vec();
                let mut bprobe = net.biases[layer].as_slice().to_vec();
                let mut fb = |theta: &[f64]| {
                    let mut candidate = net.clone();
                    candidate.biases[layer] =
                        Matrix::from_vec(1, theta.len(), theta.to_vec()).unwrap();
                    let (l, _) = candidate.forward(&h);
                    l.iter().map(|z| z * z).sum::<f64>()
                };
                let (worst, _) = check_gradient(&mut fb, &mut bprobe, &banalytic, 1e-5);
                assert!(worst < 1e-6, "seed {seed} layer {layer} bias: {worst}");
            }

            // And dL/dh against perturbing the input.
            for r in 0..2 {
                for c in 0..3 {
                    let hstep = 1e-5;
                    let mut hp = h.clone();
                    *hp.at_mut(r, c) += hstep;
                    let (lp, _) = net.forward(&hp);
                    let mut hm = h.clone();
                    *hm.at_mut(r, c) -= hstep;
                    let (lm, _) = net.forward(&hm);
                    let numeric = (lp.iter().map(|z| z * z).sum::<f64>()
                        - lm.iter().map(|z| z * z).sum::<f64>())
                        / (2.0 * hstep);
                    let err = relative_error(dh.at(r, c), numeric);
                    assert!(err < 1e-6, "dh[{r},{c}] err {err}");
                }
            }
        }
    }

    #[test]
    fn rejects_zero_dimensions() {
        let mut rng = Rng::seed_from(1);
        assert!(MlpNet::init(0, &[4], 0.01, &mut rng).is_err());
        assert!(MlpNet::init(4, &[0], 0.01, &mut rng).is_err());
    }
}
