//! Feature-crossing student: layers of x_{l+1} = x_0 * (x_l W_l + b_l) + x_l
//! (elementwise product with the original input) followed by a linear head.
//!
//! The residual form means zero weights pass the input through unchanged,
//! and each layer raises the polynomial degree of feature interactions by
//! one — a compact complement to the plain MLP student.

use crate::error::{EktfError, Result};
use crate::numkit::matrix::{affine_backward, affine_forward, matmul_at_b, Matrix};
use crate::numkit::rng::Rng;

#[derive(Clone, Debug)]
pub struct CrossNet {
    /// Square cross-layer weights, each input_dim x input_dim.
    pub cross_weights: Vec<Matrix>,
    /// Cross-layer biases, each 1 x input_dim.
    pub cross_biases: Vec<Matrix>,
    /// Scalar head: input_dim x 1 plus bias 1 x 1.
    pub head_w: Matrix,
    pub head_b: Matrix,
}

/// Cached intermediates; consumed by `backward`.
pub struct CrossTrace {
    /// xs[l] = layer input l (xs[0] = x_0 = h), length L+1.
    xs: Vec<Matrix>,
    /// us[l] = xs[l] @ W_l + b_l, length L.
    us: Vec<Matrix>,
}

impl CrossNet {
    pub fn init(input_dim: usize, layers: usize, init_std: f64, rng: &mut Rng) -> Result<Self> {
        if input_dim == 0 {
            return Err(EktfError::Config(
                "cross-network input dimension must be > 0".into(),
            ));
        }
        if layers == 0 {
            return Err(EktfError::Config(
                "cross-network needs at least one layer".into(),
            ));
        }
        let mut cross_weights = Vec::with_capacity(layers);
        let mut cross_biases = Vec::with_capacity(layers);
        for _ in 0..layers {
            let mut w = Matrix::zeros(input_dim, input_dim);
            for v in w.as_mut_slice() {
                *v = rng.next_normal_scaled(init_std);
            }
            cross_weights.push(w);
            cross_biases.push(Matrix::zeros(1, input_dim));
        }
        let mut head_w = Matrix::zeros(input_dim, 1);
        for v in head_w.as_mut_slice() {
            *v = rng.next_normal_scaled(init_std);
        }
        Ok(CrossNet {
            cross_weights,
            cross_biases,
            head_w,
            head_b: Matrix::zeros(1, 1),
        })
    }

    pub fn num_layers(&self) -> usize {
        self.cross_weights.len()
    }

    pub fn forward(&self, h: &Matrix) -> (Vec<f64>, CrossTrace) {
        let layers = self.num_layers();
        let mut xs = Vec::with_capacity(layers + 1);
        let mut us = Vec::with_capacity(layers);
        xs.push(h.clone());
        for l in 0..layers {
            let u = affine_forward(&xs[l], &self.cross_weights[l], &self.cross_biases[l]);
            let mut next = xs[l].clone();
            {
                let next_s = next.as_mut_slice();
                let u_s = u.as_slice();
                let x0_s = h.as_slice();
                for i in 0..next_s.len() {
                    next_s[i] += x0_s[i] * u_s[i];
                }
            }
            us.push(u);
            xs.push(next);
        }
        let logit_m = affine_forward(xs.last().unwrap(), &self.head_w, &self.head_b);
        let logits = logit_m.as_slice().to_vec();
        (logits, CrossTrace { xs, us })
    }

    /// Gradients in order (cross_w[0], cross_b[0], …, head_w, head_b)
    /// plus dL/dh.
    pub fn backward(
        &self,
        h: &Matrix,
        trace: CrossTrace,
        dlogit: &[f64],
    ) -> (Vec<(Matrix, Matrix)>, Matrix, (Matrix, Matrix)) {
        let layers = self.num_layers();
        let b = dlogit.len();
        let dz = Matrix::from_vec(b, 1, dlogit.to_vec()).expect("dlogit length");
        let (mut dx, dhead_w, dhead_b) =
            affine_backward(trace.xs.last().unwrap(), &self.head_w, &dz);

        // dx currently holds dL/dx_L; walk layers backward accumulating the
        // elementwise x_0 contributions separately.
        let mut dx0_extra = Matrix::zeros(h.rows(), h.cols());
        let mut cross_grads: Vec<(Matrix, Matrix)> = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            // x_{l+1} = x_0 * u_l + x_l, u_l = x_l W_l + b_l.
            let u = &trace.us[l];
            let x_l = &trace.xs[l];
            // dL/dx_0 += dx * u_l ; dL/du = dx * x_0.
            let mut du = dx.clone();
            {
                let du_s = du.as_mut_slice();
                let dx0_s = dx0_extra.as_mut_slice();
                let dx_s = dx.as_slice();
                let u_s = u.as_slice();
                let x0_s = h.as_slice();
                for i in 0..du_s.len() {
                    dx0_s[i] += dx_s[i] * u_s[i];
                    du_s[i] = dx_s[i] * x0_s[i];
                }
            }
            let dw = matmul_at_b(x_l, &du);
            let mut db = Matrix::zeros(1, du.cols());
            for r in 0..du.rows() {
                for (acc, &g) in db.row_mut(0).iter_mut().zip(du.row(r)) {
                    *acc += g;
                }
            }
            // dL/dx_l = du @ W_l^T + dx (residual path).
            let mut dx_l = crate::numkit::matrix::matmul_a_bt(&du, &self.cross_weights[l]);
            dx_l.add_assign(&dx);
            cross_grads.push((dw, db));
            dx = dx_l;
        }
        cross_grads.reverse();
        // At l = 0, dx is dL/dx_0 through the chain; add the elementwise
        // contributions collected along the way.
        dx.add_assign(&dx0_extra);
        (cross_grads, dx, (dhead_w, dhead_b))
    }
}
