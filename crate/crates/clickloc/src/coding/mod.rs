//! Sparse encoding of patches against a dictionary, and dictionary learning.
//!
//! Four encoders share one signature: given a patch `z` and a dictionary `D`
//! with unit-norm columns, produce a coefficient vector `α` with `z ≈ Dα`.
//!
//! - [`encode_ols`]: unregularized least squares (minimum-norm when singular)
//! - [`encode_ridge`]: closed form `(DᵀD + βI)α = Dᵀz` via Cholesky
//! - [`encode_lasso`]: ℓ1-penalized, solved by LARS with the lasso
//!   modification (see [`lars`](self) internals)
//! - [`encode_omp`]: greedy orthogonal matching pursuit with a fixed
//!   sparsity budget
//!
//! Dictionary learning lives in [`learn`] and alternates batch sparse coding
//! with online block-coordinate updates of the atoms.

mod lars;
mod learn;

pub use learn::{
    empirical_risk, init_dictionary, learn_dictionary, replace_dead_atoms, DictionaryLearner,
    LearnerConfig, LearnerState,
};

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::patching::PatchMatrix;

/// A dictionary of unit-norm atoms, stored column-major (p' × k).
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Mat,
}

/// Maximum deviation from unit norm tolerated in a dictionary column.
pub const ATOM_NORM_TOL: f64 = 1e-10;

impl Dictionary {
    /// Wrap an atom matrix, checking every column has unit ℓ2 norm.
    pub fn new(atoms: Mat) -> Result<Self> {
        for j in 0..atoms.cols() {
            let n = linalg::norm2(atoms.col(j));
            if (n - 1.0).abs() > ATOM_NORM_TOL {
                return Err(Error::Config(format!(
                    "dictionary column {} has norm {}, expected 1",
                    j, n
                )));
            }
        }
        Ok(Dictionary { atoms })
    }

    /// Normalize each column to unit norm, rejecting zero columns.
    pub fn from_unnormalized(mut atoms: Mat) -> Result<Self> {
        for j in 0..atoms.cols() {
            if !linalg::normalize(atoms.col_mut(j)) {
                return Err(Error::Config(format!(
                    "dictionary column {} is zero and cannot be normalized",
                    j
                )));
            }
        }
        Ok(Dictionary { atoms })
    }

    /// Patch dimension p'.
    pub fn dim(&self) -> usize {
        self.atoms.rows()
    }

    /// Atom count k.
    pub fn k(&self) -> usize {
        self.atoms.cols()
    }

    pub fn atoms(&self) -> &Mat {
        &self.atoms
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut Mat {
        &mut self.atoms
    }

    /// Persist as `CCD1`: magic, u32 p', u32 k, column-major f64 atoms,
    /// little-endian.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(b"CCD1")?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.k() as u32).to_le_bytes())?;
        for v in self.atoms.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("file too short for CCD1 header".into()))?;
        if &magic != b"CCD1" {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected CCD1",
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)
            .map_err(|_| Error::Format("unexpected end of file".into()))?;
        let p = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)
            .map_err(|_| Error::Format("unexpected end of file".into()))?;
        let k = u32::from_le_bytes(b4) as usize;
        let mut data = vec![0.0; p * k];
        let mut b8 = [0u8; 8];
        for v in data.iter_mut() {
            r.read_exact(&mut b8)
                .map_err(|_| Error::Format("unexpected end of file".into()))?;
            *v = f64::from_le_bytes(b8);
        }
        Dictionary::new(Mat::from_vec(p, k, data)?)
    }
}

/// One sparse code α for one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub values: Vec<f64>,
    /// False when an iterative encoder stopped at its step limit.
    pub converged: bool,
    /// True when OLS hit a singular system and returned the minimum-norm
    /// solution.
    pub min_norm: bool,
}

impl SparseCode {
    fn exact(values: Vec<f64>) -> Self {
        SparseCode {
            values,
            converged: true,
            min_norm: false,
        }
    }

    /// Number of strictly nonzero coefficients.
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// Encoder selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeMethod {
    Ols,
    Ridge,
    LassoLars,
    Omp,
}

/// Parameters shared by the encoders.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub method: EncodeMethod,
    /// Ridge regularization β > 0.
    pub beta: f64,
    /// Lasso regularization λ > 0.
    pub lambda: f64,
    /// OMP sparsity budget ≥ 1.
    pub omp_sparsity: usize,
    /// Step limit for the LARS path.
    pub lars_max_steps: usize,
    /// Absolute tolerance for correlation comparisons in LARS.
    pub tol: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            method: EncodeMethod::LassoLars,
            beta: 1.0,
            lambda: 0.2,
            omp_sparsity: 8,
            lars_max_steps: 400,
            tol: 1e-10,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        match self.method {
            EncodeMethod::Ridge if !(self.beta > 0.0) => Err(Error::Config(format!(
                "encoder.beta must be > 0, got {}",
                self.beta
            ))),
            EncodeMethod::LassoLars if !(self.lambda > 0.0) => Err(Error::Config(format!(
                "encoder.lambda must be > 0, got {}",
                self.lambda
            ))),
            EncodeMethod::Omp if self.omp_sparsity == 0 => {
                Err(Error::Config("encoder.omp_sparsity must be >= 1".into()))
            }
            _ if self.lars_max_steps == 0 => {
                Err(Error::Config("encoder.lars_max_steps must be >= 1".into()))
            }
            _ if !(self.tol > 0.0) => Err(Error::Config("encoder.tol must be > 0".into())),
            _ => Ok(()),
        }
    }
}

fn check_dims(z: &[f64], dict: &Dictionary) -> Result<()> {
    if z.len() != dict.dim() {
        return Err(Error::Shape(format!(
            "patch has dimension {}, dictionary expects {}",
            z.len(),
            dict.dim()
        )));
    }
    Ok(())
}

/// Relative eigenvalue cutoff for the OLS pseudo-solution.
const OLS_RANK_TOL: f64 = 1e-12;

/// Least-squares encoding via the normal equations with a symmetric
/// eigendecomposition; when `DᵀD` is singular the minimum-norm solution is
/// returned and the code is flagged.
pub fn encode_ols(z: &[f64], dict: &Dictionary) -> Result<SparseCode> {
    check_dims(z, dict)?;
    let gram = dict.atoms().gram();
    let rhs = dict.atoms().tr_matvec(z);
    let (eig, vectors) = linalg::jacobi_eigh(&gram);
    let max_eig = eig.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = max_eig * OLS_RANK_TOL;
    let mut alpha = vec![0.0; dict.k()];
    let mut min_norm = false;
    for (t, &lam) in eig.iter().enumerate() {
        if lam <= cutoff {
            min_norm = true;
            continue;
        }
        let coef = linalg::dot(vectors.col(t), &rhs) / lam;
        linalg::axpy(coef, vectors.col(t), &mut alpha);
    }
    Ok(SparseCode {
        values: alpha,
        converged: true,
        min_norm,
    })
}

/// Ridge encoding: solves `(DᵀD + βI)α = Dᵀz` through a Cholesky factor.
pub fn encode_ridge(z: &[f64], dict: &Dictionary, beta: f64) -> Result<SparseCode> {
    check_dims(z, dict)?;
    if !(beta > 0.0) {
        return Err(Error::Config(format!(
            "ridge beta must be > 0 (got {}); use encode_ols for beta = 0",
            beta
        )));
    }
    let mut gram = dict.atoms().gram();
    for j in 0..gram.cols() {
        let v = gram.get(j, j) + beta;
        gram.set(j, j, v);
    }
    let rhs = dict.atoms().tr_matvec(z);
    let alpha = linalg::solve_spd(&gram, &rhs)?;
    Ok(SparseCode::exact(alpha))
}

/// Lasso encoding by LARS: minimizes `½‖z - Dα‖² + λ‖α‖₁`.
pub fn encode_lasso(
    z: &[f64],
    dict: &Dictionary,
    lambda: f64,
    max_steps: usize,
) -> Result<SparseCode> {
    encode_lasso_tol(z, dict, lambda, max_steps, 1e-10)
}

pub fn encode_lasso_tol(
    z: &[f64],
    dict: &Dictionary,
    lambda: f64,
    max_steps: usize,
    tol: f64,
) -> Result<SparseCode> {
    check_dims(z, dict)?;
    if !(lambda > 0.0) {
        return Err(Error::Config(format!(
            "lasso lambda must be > 0, got {}",
            lambda
        )));
    }
    let r = lars::lasso_lars(z, dict.atoms(), lambda, max_steps, tol);
    Ok(SparseCode {
        values: r.alpha,
        converged: r.converged,
        min_norm: false,
    })
}

/// Orthogonal matching pursuit: greedy atom selection by residual
/// correlation with a full least-squares refit of the active set each step.
pub fn encode_omp(z: &[f64], dict: &Dictionary, sparsity: usize) -> Result<SparseCode> {
    check_dims(z, dict)?;
    let k = dict.k();
    if sparsity == 0 || sparsity > dict.dim().min(k) {
        return Err(Error::Config(format!(
            "omp sparsity {} must lie in [1, min(p', k)] = [1, {}]",
            sparsity,
            dict.dim().min(k)
        )));
    }
    let mut alpha = vec![0.0; k];
    let mut active: Vec<usize> = Vec::new();
    let mut residual = z.to_vec();
    for _ in 0..sparsity {
        let corr = dict.atoms().tr_matvec(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, &cj) in corr.iter().enumerate() {
            if active.contains(&j) {
                continue;
            }
            if best.map_or(true, |(_, b)| cj.abs() > b) {
                best = Some((j, cj.abs()));
            }
        }
        let (j, cmax) = match best {
            Some(b) => b,
            None => break,
        };
        if cmax <= 1e-12 {
            break;
        }
        active.push(j);

        // Refit on the active set.
        let sub = dict.atoms().select_columns(&active);
        let gram = sub.gram();
        let rhs = sub.tr_matvec(z);
        match linalg::solve_spd(&gram, &rhs) {
            Ok(coef) => {
                for v in alpha.iter_mut() {
                    *v = 0.0;
                }
                for (&ji, &ci) in active.iter().zip(&coef) {
                    alpha[ji] = ci;
                }
                residual = z.to_vec();
                for (&ji, &ci) in active.iter().zip(&coef) {
                    linalg::axpy(-ci, dict.atoms().col(ji), &mut residual);
                }
            }
            Err(_) => {
                // Newly added atom is collinear with the active set; undo and stop.
                active.pop();
                break;
            }
        }
    }
    Ok(SparseCode::exact(alpha))
}

/// The code matrix V (k × L) for one click's patches.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodeSet {
    codes: Mat,
    non_converged: usize,
}

impl SparseCodeSet {
    pub fn codes(&self) -> &Mat {
        &self.codes
    }

    pub fn k(&self) -> usize {
        self.codes.rows()
    }

    pub fn count(&self) -> usize {
        self.codes.cols()
    }

    /// Number of columns whose encoder did not converge.
    pub fn non_converged(&self) -> usize {
        self.non_converged
    }
}

/// Encode every patch column. All-zero patches yield all-zero codes.
pub fn encode_batch(
    patches: &PatchMatrix,
    dict: &Dictionary,
    cfg: &EncoderConfig,
) -> Result<SparseCodeSet> {
    cfg.validate()?;
    if patches.dim() != dict.dim() {
        return Err(Error::Shape(format!(
            "patches have dimension {}, dictionary expects {}",
            patches.dim(),
            dict.dim()
        )));
    }
    let l = patches.count();
    let mut codes = Mat::zeros(dict.k(), l);
    let mut non_converged = 0usize;
    for j in 0..l {
        let z = patches.columns().col(j);
        if z.iter().all(|&v| v == 0.0) {
            continue;
        }
        let code = match cfg.method {
            EncodeMethod::Ols => encode_ols(z, dict)?,
            EncodeMethod::Ridge => encode_ridge(z, dict, cfg.beta)?,
            EncodeMethod::LassoLars => {
                encode_lasso_tol(z, dict, cfg.lambda, cfg.lars_max_steps, cfg.tol)?
            }
            EncodeMethod::Omp => encode_omp(z, dict, cfg.omp_sparsity)?,
        };
        if !code.converged {
            non_converged += 1;
        }
        codes.col_mut(j).copy_from_slice(&code.values);
    }
    Ok(SparseCodeSet {
        codes,
        non_converged,
    })
}
