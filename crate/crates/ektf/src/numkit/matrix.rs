//! Dense row-major f64 matrices and the handful of kernels training needs.
//!
//! This is deliberately not a general linear-algebra layer: only the shapes
//! and operations the models use are implemented, and every kernel is plain
//! safe Rust so results are identical across machines.

use crate::error::{EktfError, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(EktfError::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Kaiming-style init: N(0, sqrt(2 / fan_in)).
    pub fn he_init(rows: usize, cols: usize, rng: &mut super::rng::Rng) -> Self {
        let std_dev = (2.0 / rows as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.next_normal_scaled(std_dev))
            .collect();
        Matrix { rows, cols, data }
    }

    /// Uniform init in [-bound, bound]; used for embeddings.
    pub fn uniform_init(rows: usize, cols: usize, bound: f64, rng: &mut super::rng::Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| (rng.next_f64() * 2.0 - 1.0) * bound)
            .collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert!(r < self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        debug_assert!(r < self.rows);
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    /// self += other, elementwise.
    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }
}

/// out = a @ b. Shapes (m,k) x (k,n) -> (m,n). ikj loop order keeps the
/// inner loop contiguous in both `b` and `out`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols, b.rows, "matmul shape mismatch");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = Matrix::zeros(m, n);
    for i in 0..m {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (p, &a_ip) in a_row.iter().enumerate().take(k) {
            if a_ip == 0.0 {
                continue;
            }
            let b_row = b.row(p);
            for (o, &b_pn) in out_row.iter_mut().zip(b_row).take(n) {
                *o += a_ip * b_pn;
            }
        }
    }
    out
}

/// out = a^T @ b. Shapes (k,m) x (k,n) -> (m,n). Used for weight gradients.
pub fn matmul_at_b(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.rows, b.rows, "matmul_at_b shape mismatch");
    let (k, m, n) = (a.rows, a.cols, b.cols);
    let mut out = Matrix::zeros(m, n);
    for p in 0..k {
        let a_row = a.row(p);
        let b_row = b.row(p);
        for i in 0..m {
            let a_pi = a_row[i];
            if a_pi == 0.0 {
                continue;
            }
            let out_row = out.row_mut(i);
            for (o, &b_pn) in out_row.iter_mut().zip(b_row).take(n) {
                *o += a_pi * b_pn;
            }
        }
    }
    out
}

/// out = a @ b^T. Shapes (m,k) x (n,k) -> (m,n). Used for input gradients.
pub fn matmul_a_bt(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols, b.cols, "matmul_a_bt shape mismatch");
    let (m, k, n) = (a.rows, a.cols, b.rows);
    let mut out = Matrix::zeros(m, n);
    for i in 0..m {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (j, o) in out_row.iter_mut().enumerate().take(n) {
            let b_row = b.row(j);
            let mut acc = 0.0;
            for p in 0..k {
                acc += a_row[p] * b_row[p];
            }
            *o = acc;
        }
    }
    out
}

/// y = x @ w + bias (bias is 1 x n, broadcast over rows).
pub fn affine_forward(x: &Matrix, w: &Matrix, bias: &Matrix) -> Matrix {
    assert_eq!(bias.rows, 1, "bias must be a row vector");
    assert_eq!(bias.cols, w.cols, "bias width must match weight output");
    let mut y = matmul(x, w);
    for r in 0..y.rows {
        let row = y.row_mut(r);
        for (v, &b) in row.iter_mut().zip(bias.row(0)) {
            *v += b;
        }
    }
    y
}

/// Gradients of an affine layer given upstream dL/dy.
/// Returns (dL/dx, dL/dw, dL/dbias).
pub fn affine_backward(x: &Matrix, w: &Matrix, dy: &Matrix) -> (Matrix, Matrix, Matrix) {
    let dx = matmul_a_bt(dy, w);
    let dw = matmul_at_b(x, dy);
    let mut dbias = Matrix::zeros(1, dy.cols);
    for r in 0..dy.rows {
        let row = dy.row(r);
        for (d, &g) in dbias.row_mut(0).iter_mut().zip(row) {
            *d += g;
        }
    }
    (dx, dw, dbias)
}

pub fn relu(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for v in &mut out.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// dL/dx for relu given pre-activation x and upstream dL/dy.
pub fn relu_backward(x: &Matrix, dy: &Matrix) -> Matrix {
    assert_eq!(x.rows, dy.rows);
    assert_eq!(x.cols, dy.cols);
    let mut dx = dy.clone();
    for (d, &v) in dx.data.iter_mut().zip(&x.data) {
        if v <= 0.0 {
            *d = 0.0;
        }
    }
    dx
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::rng::Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn matmul_small_case() {
        // [[1,2],[3,4]] @ [[5,6],[7,8]] = [[19,22],[43,50]]
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let c = matmul(&a, &b);
        assert_eq!(c.as_slice(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn transposed_products_agree_with_plain_matmul() {
        let mut rng = Rng::seed_from(11);
        let a = Matrix::he_init(4, 3, &mut rng);
        let b = Matrix::he_init(4, 5, &mut rng);
        // a^T @ b via matmul_at_b vs explicit transpose.
        let got = matmul_at_b(&a, &b);
        let mut at = Matrix::zeros(3, 4);
        for r in 0..4 {
            for c in 0..3 {
                *at.at_mut(c, r) = a.at(r, c);
            }
        }
        let want = matmul(&at, &b);
        for (x, y) in got.as_slice().iter().zip(want.as_slice()) {
            assert!(close(*x, *y));
        }

        let c = Matrix::he_init(6, 3, &mut rng);
        let d = Matrix::he_init(5, 3, &mut rng);
        let got = matmul_a_bt(&c, &d);
        let mut dt = Matrix::zeros(3, 5);
        for r in 0..5 {
            for col in 0..3 {
                *dt.at_mut(col, r) = d.at(r, col);
            }
        }
        let want = matmul(&c, &dt);
        for (x, y) in got.as_slice().iter().zip(want.as_slice()) {
            assert!(close(*x, *y));
        }
    }

    #[test]
    fn affine_broadcasts_bias() {
        let x = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let w = Matrix::from_vec(2, 1, vec![2.0, 3.0]).unwrap();
        let b = Matrix::from_vec(1, 1, vec![0.5]).unwrap();
        let y = affine_forward(&x, &w, &b);
        assert_eq!(y.as_slice(), &[2.5, 3.5]);
    }

    #[test]
    fn relu_zeroes_negatives_and_gates_gradient() {
        let x = Matrix::from_vec(1, 4, vec![-1.0, 0.0, 0.5, 2.0]).unwrap();
        let y = relu(&x);
        assert_eq!(y.as_slice(), &[0.0, 0.0, 0.5, 2.0]);
        let dy = Matrix::from_vec(1, 4, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let dx = relu_backward(&x, &dy);
        assert_eq!(dx.as_slice(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn sigmoid_is_stable_and_symmetric() {
        assert!(close(sigmoid(0.0), 0.5));
        assert!(close(sigmoid(2.0) + sigmoid(-2.0), 1.0));
        // Extreme inputs saturate without producing NaN.
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Matrix::from_vec(2, 2, vec![1.0]).is_err());
    }
}
