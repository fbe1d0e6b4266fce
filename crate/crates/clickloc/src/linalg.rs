//! Small dense linear algebra used throughout the pipeline.
//!
//! Everything here is deliberately plain: column-major storage in a `Vec<f64>`,
//! straightforward loops, no BLAS. The matrices involved are small (patch
//! length × dictionary size, active sets of a few dozen atoms), and keeping the
//! arithmetic explicit makes runs bit-reproducible across machines.

use crate::error::{Error, Result};

/// Dense column-major matrix. `col(j)` is a contiguous slice, which is the
/// access pattern every hot loop in the crate uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from explicit column vectors. All columns must share one length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Shape(format!(
                    "column {} has length {}, expected {}",
                    j,
                    c.len(),
                    rows
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// p×p identity.
    pub fn identity(p: usize) -> Self {
        let mut m = Mat::zeros(p, p);
        for i in 0..p {
            m.data[i * p + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `A · x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let c = self.col(j);
            for (yi, &cij) in y.iter_mut().zip(c) {
                *yi += cij * xj;
            }
        }
        y
    }

    /// `Aᵀ · x`: one dot product per column.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec dimension mismatch");
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// Gram matrix `AᵀA` (cols × cols).
    pub fn gram(&self) -> Mat {
        let k = self.cols;
        let mut g = Mat::zeros(k, k);
        for j in 0..k {
            for i in 0..=j {
                let v = dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Select a subset of columns into a new matrix.
    pub fn select_columns(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(self.rows, idx.len());
        for (dst, &src) in idx.iter().enumerate() {
            m.col_mut(dst).copy_from_slice(self.col(src));
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Scale `v` to unit ℓ2 norm. Zero vectors are left untouched and `false`
/// is returned.
pub fn normalize(v: &mut [f64]) -> bool {
    let n = norm2(v);
    if n == 0.0 {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}

/// Cholesky factorization `A = L·Lᵀ` of a symmetric positive definite matrix.
/// Returns the lower triangle, or `None` if a pivot is not strictly positive.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for t in 0..j {
            let v = l.get(j, t);
            d -= v * v;
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l.set(j, j, dj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for t in 0..j {
                s -= l.get(i, t) * l.get(j, t);
            }
            l.set(i, j, s / dj);
        }
    }
    Some(l)
}

/// Solve `L·Lᵀ·x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    // Forward: L y = b
    let mut y = b.to_vec();
    for i in 0..n {
        for t in 0..i {
            y[i] -= l.get(i, t) * y[t];
        }
        y[i] /= l.get(i, i);
    }
    // Backward: Lᵀ x = y
    for i in (0..n).rev() {
        for t in (i + 1)..n {
            y[i] -= l.get(t, i) * y[t];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Solve a symmetric positive definite system `A x = b`.
pub fn solve_spd(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a).ok_or_else(|| {
        Error::Numeric("Cholesky factorization failed: matrix is not positive definite".into())
    })?;
    Ok(cholesky_solve(&l, b))
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// eigenvector `j` is column `j`. Deterministic and adequate for the
/// moderate sizes used here (patch covariance up to a few hundred).
pub fn jacobi_eigh(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    if n <= 1 {
        return (vec![if n == 1 { m.get(0, 0) } else { 0.0 }; n], v);
    }

    let off = |m: &Mat| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                s += m.get(i, j) * m.get(i, j);
            }
        }
        s
    };
    let scale: f64 = (0..n).map(|i| m.get(i, i).abs()).fold(1e-300, f64::max);
    let tol = 1e-30 * scale * scale * (n * n) as f64;

    for _sweep in 0..64 {
        if off(&m) <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Apply rotation to rows/columns p,q of m.
                for i in 0..n {
                    let aip = m.get(i, p);
                    let aiq = m.get(i, q);
                    m.set(i, p, c * aip - s * aiq);
                    m.set(i, q, s * aip + c * aiq);
                }
                for i in 0..n {
                    let api = m.get(p, i);
                    let aqi = m.get(q, i);
                    m.set(p, i, c * api - s * aqi);
                    m.set(q, i, s * api + c * aqi);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| eig[j].partial_cmp(&eig[i]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| eig[i]).collect();
    let vectors = v.select_columns(&order);
    (values, vectors)
}
