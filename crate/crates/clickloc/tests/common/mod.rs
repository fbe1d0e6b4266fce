//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver paths it is used to check: the lasso oracle is plain
//! cyclic coordinate descent, the least-squares oracle is Householder QR,
//! the linear-system oracle is Gaussian elimination with partial pivoting.
#![allow(dead_code)]

use clickloc::linalg::Mat;
use clickloc::seed::stream_rng;
use rand::Rng;

/// Deterministic dictionary with unit-norm columns.
pub fn random_unit_dict(p: usize, k: usize, seed: u64) -> Mat {
    let mut rng = stream_rng(seed, "oracle-dict", 0);
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut c: Vec<f64> = (0..p).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in c.iter_mut() {
                *v /= n;
            }
            c
        })
        .collect();
    Mat::from_columns(&cols).unwrap()
}

/// Deterministic orthonormal columns (Gram-Schmidt on random vectors).
pub fn random_orthonormal(p: usize, k: usize, seed: u64) -> Mat {
    assert!(k <= p);
    let raw = random_unit_dict(p, k, seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut c = raw.col(j).to_vec();
        for prev in &cols {
            let proj: f64 = c.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (ci, pi) in c.iter_mut().zip(prev) {
                *ci -= proj * pi;
            }
        }
        let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in c.iter_mut() {
            *v /= n;
        }
        cols.push(c);
    }
    Mat::from_columns(&cols).unwrap()
}

pub fn random_vec(p: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, "oracle-signal", 0);
    (0..p).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()
}

/// Lasso objective ½‖z - Dα‖² + λ‖α‖₁.
pub fn lasso_objective(z: &[f64], atoms: &Mat, lambda: f64, alpha: &[f64]) -> f64 {
    let mut residual = z.to_vec();
    let mut l1 = 0.0;
    for (j, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            for (r, &d) in residual.iter_mut().zip(atoms.col(j)) {
                *r -= a * d;
            }
            l1 += a.abs();
        }
    }
    0.5 * residual.iter().map(|r| r * r).sum::<f64>() + lambda * l1
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for the lasso with unit-norm columns, run to a
/// tight KKT tolerance. Independent of the LARS path it is used to verify.
pub fn cd_lasso(z: &[f64], atoms: &Mat, lambda: f64, kkt_tol: f64, max_sweeps: usize) -> Vec<f64> {
    let k = atoms.cols();
    let mut alpha = vec![0.0; k];
    let mut residual = z.to_vec();
    for _ in 0..max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..k {
            let col = atoms.col(j);
            let old = alpha[j];
            let corr: f64 = residual.iter().zip(col).map(|(r, d)| r * d).sum();
            // Unit-norm column: the coordinate minimizer is a soft threshold.
            let new = soft_threshold(corr + old, lambda);
            if new != old {
                let delta = new - old;
                for (r, &d) in residual.iter_mut().zip(col) {
                    *r -= delta * d;
                }
                alpha[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < 1e-14 {
            break;
        }
        // Exit early once the KKT system is satisfied tightly.
        let mut worst = 0.0f64;
        for j in 0..k {
            let corr: f64 = residual.iter().zip(atoms.col(j)).map(|(r, d)| r * d).sum();
            let v = if alpha[j] == 0.0 {
                (corr.abs() - lambda).max(0.0)
            } else {
                (corr - lambda * alpha[j].signum()).abs()
            };
            worst = worst.max(v);
        }
        if worst <= kkt_tol {
            break;
        }
    }
    alpha
}

/// Least squares min ‖b - A x‖ via Householder QR (full column rank).
pub fn qr_lstsq(a: &Mat, b: &[f64]) -> Vec<f64> {
    let m = a.rows();
    let n = a.cols();
    assert!(m >= n);
    // Dense column-major working copy of A and b.
    let mut r = a.clone();
    let mut y = b.to_vec();
    for j in 0..n {
        // Householder vector for column j, rows j..m.
        let mut norm = 0.0f64;
        for i in j..m {
            norm += r.get(i, j) * r.get(i, j);
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r.get(j, j) >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - j];
        v[0] = r.get(j, j) - alpha;
        for i in j + 1..m {
            v[i - j] = r.get(i, j);
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // Apply H = I - 2vvᵀ/vᵀv to the remaining columns and to y.
        for col in j..n {
            let mut dot = 0.0;
            for i in j..m {
                dot += v[i - j] * r.get(i, col);
            }
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                let val = r.get(i, col) - f * v[i - j];
                r.set(i, col, val);
            }
        }
        let mut dot = 0.0;
        for i in j..m {
            dot += v[i - j] * y[i];
        }
        let f = 2.0 * dot / vnorm2;
        for i in j..m {
            y[i] -= f * v[i - j];
        }
    }
    // Back substitution on the upper triangle.
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for t in i + 1..n {
            s -= r.get(i, t) * x[t];
        }
        x[i] = s / r.get(i, i);
    }
    x
}

/// Solve a square linear system by Gaussian elimination with partial
/// pivoting. Used as the independent route for the ridge normal equations.
pub fn gauss_solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    // Row-major augmented matrix.
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a.get(i, j)).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for i in col + 1..n {
            let f = m[i][col] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..=n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for j in i + 1..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    x
}
