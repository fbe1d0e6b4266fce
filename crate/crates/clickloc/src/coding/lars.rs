//! Least-angle regression with the lasso modification.
//!
//! Solves `min ½‖z - Dα‖² + λ‖α‖₁` for a dictionary with unit-norm columns by
//! tracking the piecewise-linear coefficient path: atoms enter the active set
//! when their residual correlation reaches the current maximum, coefficients
//! move along the equiangular direction, atoms whose coefficient crosses zero
//! are dropped, and the path terminates when the active correlation magnitude
//! falls to λ. On exit the active coefficients are re-solved from the KKT
//! stationarity system, so `|d_jᵀ(z - Dα)| = λ` holds to machine precision on
//! the active set.
//!
//! The active-set Gram matrix is maintained as an incrementally extended
//! Cholesky factor; a drop rebuilds the factor from scratch (drops are rare).
//! Ties in the entering-atom selection are broken toward the lowest index,
//! which keeps the path deterministic.

use crate::linalg::{axpy, dot, Mat};

pub(crate) struct LarsResult {
    pub alpha: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum AtomState {
    Free,
    Active,
    /// Collinear with the active set at the current active configuration;
    /// cleared whenever an atom is dropped.
    Excluded,
}

/// Packed row-major lower-triangular Cholesky factor of the active Gram
/// matrix, grown one atom at a time.
struct ActiveCholesky {
    data: Vec<f64>,
    n: usize,
}

impl ActiveCholesky {
    fn new() -> Self {
        ActiveCholesky {
            data: Vec::new(),
            n: 0,
        }
    }

    fn clear(&mut self) {
        self.data.clear();
        self.n = 0;
    }

    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    /// Try to append an atom whose Gram column against the current active
    /// atoms is `g` and whose squared norm is `g_diag`. Fails when the Schur
    /// complement is not positive (collinear atom).
    fn try_append(&mut self, g: &[f64], g_diag: f64, tol: f64) -> bool {
        debug_assert_eq!(g.len(), self.n);
        // Forward solve L x = g.
        let mut x = g.to_vec();
        for i in 0..self.n {
            let row = self.row(i);
            let mut v = x[i];
            for t in 0..i {
                v -= row[t] * x[t];
            }
            x[i] = v / row[i];
        }
        let d2 = g_diag - dot(&x, &x);
        if d2 <= tol {
            return false;
        }
        self.data.extend_from_slice(&x);
        self.data.push(d2.sqrt());
        self.n += 1;
        true
    }

    /// Solve `L Lᵀ y = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut y = b.to_vec();
        for i in 0..self.n {
            let row = self.row(i);
            let mut v = y[i];
            for t in 0..i {
                v -= row[t] * y[t];
            }
            y[i] = v / row[i];
        }
        for i in (0..self.n).rev() {
            let mut v = y[i];
            for t in (i + 1)..self.n {
                v -= self.row(t)[i] * y[t];
            }
            y[i] = v / self.row(i)[i];
        }
        y
    }
}

/// Schur-complement floor below which an atom is treated as collinear.
const COLLINEAR_TOL: f64 = 1e-12;

pub(crate) fn lasso_lars(
    z: &[f64],
    atoms: &Mat,
    lambda: f64,
    max_steps: usize,
    tol: f64,
) -> LarsResult {
    let k = atoms.cols();
    let p = atoms.rows();
    debug_assert_eq!(z.len(), p);

    let mut alpha = vec![0.0; k];
    let mut c = atoms.tr_matvec(z);
    let mut state = vec![AtomState::Free; k];
    let mut active: Vec<usize> = Vec::new();
    let mut sign: Vec<f64> = Vec::new();
    let mut chol = ActiveCholesky::new();
    let mut c_cur = 0.0;
    let mut steps = 0usize;
    let mut converged = true;

    loop {
        if active.is_empty() {
            // Select the most correlated free atom; lowest index wins ties.
            let mut best: Option<(usize, f64)> = None;
            for (j, &cj) in c.iter().enumerate() {
                if state[j] != AtomState::Free {
                    continue;
                }
                let a = cj.abs();
                if best.map_or(true, |(_, b)| a > b + tol) {
                    best = Some((j, a));
                }
            }
            match best {
                Some((j, cmax)) if cmax > lambda => {
                    // Unit-norm atom: the 1x1 Gram is exactly 1.
                    let ok = chol.try_append(&[], 1.0, COLLINEAR_TOL);
                    debug_assert!(ok);
                    active.push(j);
                    sign.push(if c[j] >= 0.0 { 1.0 } else { -1.0 });
                    state[j] = AtomState::Active;
                    c_cur = cmax;
                }
                _ => break, // KKT holds at the current iterate
            }
        }

        if steps >= max_steps {
            converged = false;
            break;
        }
        steps += 1;

        // Equiangular direction: w = A_A · G_A⁻¹ s, with A_A = (sᵀG_A⁻¹s)^(-½).
        let q = chol.solve(&sign);
        let sq = dot(&sign, &q);
        if !(sq > 0.0) || !sq.is_finite() {
            converged = false;
            break;
        }
        let a_norm = 1.0 / sq.sqrt();
        let w: Vec<f64> = q.iter().map(|&v| v * a_norm).collect();

        // u = D_A w and its correlation with every atom.
        let mut u = vec![0.0; p];
        for (i, &ji) in active.iter().enumerate() {
            axpy(w[i], atoms.col(ji), &mut u);
        }
        let corr_dir = atoms.tr_matvec(&u);

        let gamma_stop = (c_cur - lambda) / a_norm;

        let mut gamma_enter = f64::INFINITY;
        let mut enter_j = None;
        for j in 0..k {
            if state[j] != AtomState::Free {
                continue;
            }
            for cand in [
                (c_cur - c[j]) / (a_norm - corr_dir[j]),
                (c_cur + c[j]) / (a_norm + corr_dir[j]),
            ] {
                if cand > tol && cand < gamma_enter - tol {
                    gamma_enter = cand;
                    enter_j = Some(j);
                }
            }
        }

        let mut gamma_drop = f64::INFINITY;
        for (i, &ji) in active.iter().enumerate() {
            if w[i] != 0.0 {
                let g = -alpha[ji] / w[i];
                if g > tol && g < gamma_drop - tol {
                    gamma_drop = g;
                }
            }
        }

        let gamma = gamma_stop.min(gamma_enter).min(gamma_drop);
        // Identify zero crossings before moving (they land exactly on zero).
        let drops: Vec<usize> = if gamma_drop <= gamma_enter && gamma_drop < gamma_stop {
            active
                .iter()
                .enumerate()
                .filter(|&(i, &ji)| {
                    w[i] != 0.0 && {
                        let g = -alpha[ji] / w[i];
                        g > tol && (g - gamma).abs() <= tol * gamma.max(1.0)
                    }
                })
                .map(|(i, _)| i)
                .collect()
        } else {
            Vec::new()
        };

        for (i, &ji) in active.iter().enumerate() {
            alpha[ji] += gamma * w[i];
        }
        for (cj, &aj) in c.iter_mut().zip(&corr_dir) {
            *cj -= gamma * aj;
        }
        c_cur -= gamma * a_norm;
        // Pin active correlations: they decay at exactly rate A_A by
        // construction, so this only removes accumulated float drift.
        for (i, &ji) in active.iter().enumerate() {
            c[ji] = sign[i] * c_cur;
        }

        if gamma_stop <= gamma_enter && gamma_stop <= gamma_drop {
            break; // reached the λ boundary
        }

        if !drops.is_empty() {
            for &i in drops.iter().rev() {
                let ji = active[i];
                alpha[ji] = 0.0;
                state[ji] = AtomState::Free;
                active.remove(i);
                sign.remove(i);
            }
            // Collinearity is relative to the active set; re-test excluded atoms.
            for s in state.iter_mut() {
                if *s == AtomState::Excluded {
                    *s = AtomState::Free;
                }
            }
            // Rebuild the factor for the reduced active set.
            chol.clear();
            let mut ok = true;
            for (pos, &ji) in active.iter().enumerate() {
                let g: Vec<f64> = active[..pos]
                    .iter()
                    .map(|&ja| dot(atoms.col(ja), atoms.col(ji)))
                    .collect();
                if !chol.try_append(&g, dot(atoms.col(ji), atoms.col(ji)), COLLINEAR_TOL) {
                    ok = false;
                    break;
                }
            }
            if !ok {
                converged = false;
                break;
            }
            continue;
        }

        if let Some(j) = enter_j {
            let g: Vec<f64> = active
                .iter()
                .map(|&ja| dot(atoms.col(ja), atoms.col(j)))
                .collect();
            if chol.try_append(&g, dot(atoms.col(j), atoms.col(j)), COLLINEAR_TOL) {
                sign.push(if c[j] >= 0.0 { 1.0 } else { -1.0 });
                active.push(j);
                state[j] = AtomState::Active;
            } else {
                state[j] = AtomState::Excluded;
            }
        } else {
            // No entering atom and no drop: the stop condition must bind.
            break;
        }
    }

    // Polish: solve the KKT stationarity system on the final active set,
    // G_A α_A = D_Aᵀz - λ·s. Kept only if it respects the path's signs.
    if converged && !active.is_empty() {
        let rhs: Vec<f64> = active
            .iter()
            .zip(&sign)
            .map(|(&ji, &si)| dot(atoms.col(ji), z) - lambda * si)
            .collect();
        let polished = chol.solve(&rhs);
        if polished
            .iter()
            .zip(&sign)
            .all(|(&v, &s)| v * s >= -1e-12 && v.is_finite())
        {
            for (i, &ji) in active.iter().enumerate() {
                alpha[ji] = polished[i];
            }
        }
    }

    LarsResult { alpha, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use approx::assert_abs_diff_eq;

    fn unit_cols(cols: Vec<Vec<f64>>) -> Mat {
        let normed: Vec<Vec<f64>> = cols
            .into_iter()
            .map(|mut c| {
                let n = norm2(&c);
                for v in c.iter_mut() {
                    *v /= n;
                }
                c
            })
            .collect();
        Mat::from_columns(&normed).unwrap()
    }

    #[test]
    fn large_lambda_returns_zero() {
        let d = unit_cols(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = lasso_lars(&[0.3, -0.2], &d, 0.5, 100, 1e-10);
        assert!(r.converged);
        assert_eq!(r.alpha, vec![0.0, 0.0]);
    }

    #[test]
    fn orthonormal_case_is_soft_thresholding() {
        let d = unit_cols(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let z = [0.9, -0.5, 0.1];
        let lambda = 0.2;
        let r = lasso_lars(&z, &d, lambda, 100, 1e-10);
        assert!(r.converged);
        for j in 0..3 {
            let want = z[j].signum() * (z[j].abs() - lambda).max(0.0);
            assert_abs_diff_eq!(r.alpha[j], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn kkt_conditions_hold_on_a_correlated_dictionary() {
        let d = unit_cols(vec![
            vec![1.0, 0.2, -0.1, 0.4],
            vec![0.9, 0.3, 0.0, 0.3],
            vec![-0.2, 1.0, 0.5, 0.1],
            vec![0.1, -0.4, 1.0, 0.2],
            vec![0.3, 0.3, 0.3, 1.0],
            vec![-0.5, 0.2, 0.8, -0.3],
        ]);
        let z = [0.7, -1.1, 0.4, 0.9];
        let lambda = 0.15;
        let r = lasso_lars(&z, &d, lambda, 200, 1e-10);
        assert!(r.converged);
        let mut residual = z.to_vec();
        for (j, &a) in r.alpha.iter().enumerate() {
            axpy(-a, d.col(j), &mut residual);
        }
        for j in 0..d.cols() {
            let corr = dot(d.col(j), &residual);
            assert!(
                corr.abs() <= lambda + 1e-8,
                "atom {}: |corr|={}",
                j,
                corr.abs()
            );
            if r.alpha[j] != 0.0 {
                assert_abs_diff_eq!(corr, lambda * r.alpha[j].signum(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn duplicate_atoms_do_not_break_the_path() {
        // Second column duplicates the first: must be excluded, not crash.
        let d = unit_cols(vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
        ]);
        let z = [1.0, 0.5, 0.2];
        let r = lasso_lars(&z, &d, 0.1, 100, 1e-10);
        assert!(r.converged);
        assert!(r.alpha.iter().all(|v| v.is_finite()));
    }
}
