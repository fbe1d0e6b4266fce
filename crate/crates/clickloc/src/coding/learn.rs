//! Online dictionary learning by alternating minimization.
//!
//! The learner minimizes the regularized empirical risk
//! `(1/M) Σ ½‖z_i - Dα_i‖² + λ‖α_i‖₁` subject to unit-norm atoms, by
//! alternating (a) lasso-coding a mini-batch against the current dictionary
//! and (b) a block coordinate descent pass over atoms driven by the running
//! accumulators `A = Σ ααᵀ` and `B = Σ zαᵀ`: each column moves to
//! `u_j = d_j + (b_j - D·a_j)/A_jj` and is renormalized. Columns whose
//! accumulated energy `A_jj` is below [`DEAD_ATOM_TOL`] are skipped and
//! replaced by fresh sample patches at the end of each pass.

use rayon::prelude::*;

use super::{lars, Dictionary};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::seed::stream_rng;

/// `A_jj` below this marks an atom as unused ("dead").
pub const DEAD_ATOM_TOL: f64 = 1e-12;

/// Settings for [`learn_dictionary`].
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    /// Atom count k.
    pub k: usize,
    /// Lasso regularization λ > 0 (shared with the encoding stage).
    pub lambda: f64,
    /// Full passes over the sample.
    pub iterations: usize,
    /// Mini-batch size.
    pub batch_size: usize,
    /// Seed for initialization and dead-atom replacement.
    pub seed: u64,
    /// Step limit for the per-patch LARS solves.
    pub lars_max_steps: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            k: 128,
            lambda: 0.2,
            iterations: 15,
            batch_size: 256,
            seed: 0,
            lars_max_steps: 400,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("learner.k must be >= 1".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "learner.lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("learner.iterations must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("learner.batch_size must be >= 1".into()));
        }
        if self.lars_max_steps == 0 {
            return Err(Error::Config("learner.lars_max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Running sufficient statistics of the online updates.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// k×k accumulator Σ ααᵀ (symmetric positive semidefinite).
    a: Mat,
    /// p'×k accumulator Σ zαᵀ.
    b: Mat,
    /// Patches folded into the accumulators so far.
    seen: usize,
    pub lambda: f64,
    pub batch_size: usize,
    pub iterations: usize,
}

impl LearnerState {
    fn new(p: usize, cfg: &LearnerConfig) -> Self {
        LearnerState {
            a: Mat::zeros(cfg.k, cfg.k),
            b: Mat::zeros(p, cfg.k),
            seen: 0,
            lambda: cfg.lambda,
            batch_size: cfg.batch_size,
            iterations: cfg.iterations,
        }
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn seen(&self) -> usize {
        self.seen
    }

    /// Atom indices with `A_jj` below the dead threshold.
    pub fn dead_atoms(&self) -> Vec<usize> {
        (0..self.a.cols())
            .filter(|&j| self.a.get(j, j) < DEAD_ATOM_TOL)
            .collect()
    }
}

/// Draw `k` distinct nonzero sample columns; this is the shared selection
/// stream for initialization and dead-atom replacement, so replacing every
/// atom reproduces a fresh initialization with the same seed.
fn draw_atom_indices(
    sample: &Mat,
    k: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<usize>> {
    // Threshold rather than != 0: a patch whose entries sit below ~1e-160
    // has a squared norm that underflows to 0 and cannot be renormalized.
    let nonzero: Vec<usize> = (0..sample.cols())
        .filter(|&j| linalg::norm2(sample.col(j)) > 1e-12)
        .collect();
    if nonzero.len() < k {
        return Err(Error::Config(format!(
            "dictionary needs k={} distinct nonzero sample patches, only {} available",
            k,
            nonzero.len()
        )));
    }
    let picked = rand::seq::index::sample(rng, nonzero.len(), k);
    Ok(picked.iter().map(|i| nonzero[i]).collect())
}

/// Initialize a dictionary from `k` sample columns drawn without replacement
/// (seeded, deterministic), each renormalized to unit norm.
pub fn init_dictionary(sample: &Mat, k: usize, seed: u64) -> Result<Dictionary> {
    if sample.cols() < k {
        return Err(Error::Config(format!(
            "sample of {} patches is smaller than k={}",
            sample.cols(),
            k
        )));
    }
    let mut rng = stream_rng(seed, "dict-init", 0);
    let idx = draw_atom_indices(sample, k, &mut rng)?;
    let mut atoms = Mat::zeros(sample.rows(), k);
    for (dst, &src) in idx.iter().enumerate() {
        let col = atoms.col_mut(dst);
        col.copy_from_slice(sample.col(src));
        linalg::normalize(col);
    }
    Dictionary::new(atoms)
}

/// Replace atoms whose accumulated energy marks them dead with fresh sample
/// patches. Deterministic per seed; replacing all k atoms equals
/// [`init_dictionary`] with the same seed. If the sample has no nonzero
/// columns, the dictionary is returned unchanged.
pub fn replace_dead_atoms(
    dict: &Dictionary,
    state: &LearnerState,
    sample: &Mat,
    seed: u64,
) -> Result<Dictionary> {
    let dead = state.dead_atoms();
    let mut out = dict.clone();
    if dead.is_empty() {
        return Ok(out);
    }
    let mut rng = stream_rng(seed, "dict-init", 0);
    let idx = match draw_atom_indices(sample, dict.k(), &mut rng) {
        Ok(idx) => idx,
        // Degenerate (all-zero) sample: nothing usable to draw, keep atoms.
        Err(_) => return Ok(out),
    };
    for (slot, &j) in dead.iter().enumerate() {
        let col = out.atoms_mut().col_mut(j);
        col.copy_from_slice(sample.col(idx[slot]));
        linalg::normalize(col);
    }
    Ok(out)
}

/// Incremental dictionary learner; [`learn_dictionary`] drives it, tests and
/// examples can step it pass by pass to watch the objective.
pub struct DictionaryLearner {
    dict: Dictionary,
    state: LearnerState,
    cfg: LearnerConfig,
}

impl DictionaryLearner {
    /// Initialize from a p'×M sample of patch columns.
    pub fn init(sample: &Mat, cfg: LearnerConfig) -> Result<Self> {
        cfg.validate()?;
        if sample.cols() == 0 {
            return Err(Error::Config(
                "dictionary learning needs a nonempty patch sample".into(),
            ));
        }
        let dict = init_dictionary(sample, cfg.k, cfg.seed)?;
        let state = LearnerState::new(sample.rows(), &cfg);
        Ok(DictionaryLearner { dict, state, cfg })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn into_dictionary(self) -> Dictionary {
        self.dict
    }

    /// One full pass over the sample in mini-batches: lasso-code each batch,
    /// fold it into the accumulators, run one block coordinate descent over
    /// the atoms per batch, then replace dead atoms.
    pub fn run_pass(&mut self, sample: &Mat, pass: usize) -> Result<()> {
        let m = sample.cols();
        let mut start = 0;
        while start < m {
            let end = (start + self.cfg.batch_size).min(m);
            self.absorb_batch(sample, start..end);
            self.update_atoms();
            start = end;
        }
        self.dict = replace_dead_atoms(
            &self.dict,
            &self.state,
            sample,
            crate::seed::derive_seed(self.cfg.seed, "dead-atoms", pass as u64),
        )?;
        Ok(())
    }

    /// Sparse-code the batch columns in parallel and add them to A and B.
    fn absorb_batch(&mut self, sample: &Mat, range: std::ops::Range<usize>) {
        let atoms = self.dict.atoms();
        let lambda = self.cfg.lambda;
        let max_steps = self.cfg.lars_max_steps;
        let codes: Vec<Vec<f64>> = range
            .clone()
            .into_par_iter()
            .map(|j| {
                let z = sample.col(j);
                if z.iter().all(|&v| v == 0.0) {
                    vec![0.0; atoms.cols()]
                } else {
                    lars::lasso_lars(z, atoms, lambda, max_steps, 1e-10).alpha
                }
            })
            .collect();

        for (offset, alpha) in codes.iter().enumerate() {
            let z = sample.col(range.start + offset);
            let nonzero: Vec<usize> = (0..alpha.len()).filter(|&j| alpha[j] != 0.0).collect();
            for &j in &nonzero {
                let aj = alpha[j];
                let col = self.state.a.col_mut(j);
                for &i in &nonzero {
                    col[i] += alpha[i] * aj;
                }
                linalg::axpy(aj, z, self.state.b.col_mut(j));
            }
            self.state.seen += 1;
        }
    }

    /// One block coordinate descent sweep over atoms:
    /// `u_j = d_j + (b_j - D·a_j)/A_jj`, renormalized. Atoms with tiny
    /// `A_jj` are left untouched.
    fn update_atoms(&mut self) {
        let k = self.cfg.k;
        let p = self.state.b.rows();
        let mut u = vec![0.0; p];
        for j in 0..k {
            let ajj = self.state.a.get(j, j);
            if ajj < DEAD_ATOM_TOL {
                continue;
            }
            // u = d_j + (b_j - D a_j) / ajj
            u.copy_from_slice(self.state.b.col(j));
            let a_col = self.state.a.col(j);
            for (l, &al) in a_col.iter().enumerate() {
                if al != 0.0 {
                    linalg::axpy(-al, self.dict.atoms().col(l), &mut u);
                }
            }
            for (ui, &dij) in u.iter_mut().zip(self.dict.atoms().col(j)) {
                *ui = dij + *ui / ajj;
            }
            if linalg::norm2(&u) > 0.0 {
                let col = self.dict.atoms_mut().col_mut(j);
                col.copy_from_slice(&u);
                linalg::normalize(col);
            }
        }
    }
}

/// Learn a dictionary with `cfg.iterations` full passes over the sample.
pub fn learn_dictionary(sample: &Mat, cfg: &LearnerConfig) -> Result<Dictionary> {
    let mut learner = DictionaryLearner::init(sample, cfg.clone())?;
    for pass in 0..cfg.iterations {
        learner.run_pass(sample, pass)?;
    }
    Ok(learner.into_dictionary())
}

/// Regularized empirical risk of a dictionary on a patch sample, with codes
/// recomputed by lasso: `(1/M) Σ ½‖z - Dα‖² + λ‖α‖₁`.
pub fn empirical_risk(sample: &Mat, dict: &Dictionary, lambda: f64, max_steps: usize) -> f64 {
    let m = sample.cols();
    if m == 0 {
        return 0.0;
    }
    let costs: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let z = sample.col(j);
            if z.iter().all(|&v| v == 0.0) {
                return 0.0;
            }
            let alpha = lars::lasso_lars(z, dict.atoms(), lambda, max_steps, 1e-10).alpha;
            let mut residual = z.to_vec();
            let mut l1 = 0.0;
            for (j, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    linalg::axpy(-a, dict.atoms().col(j), &mut residual);
                    l1 += a.abs();
                }
            }
            0.5 * linalg::dot(&residual, &residual) + lambda * l1
        })
        .collect();
    costs.iter().sum::<f64>() / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn sample_from_atoms(p: usize, k_true: usize, m: usize, seed: u64) -> Mat {
        let mut rng = stream_rng(seed, "test-sample", 0);
        let true_atoms: Vec<Vec<f64>> = (0..k_true)
            .map(|_| {
                let mut c: Vec<f64> = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
                linalg::normalize(&mut c);
                c
            })
            .collect();
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let mut z = vec![0.0; p];
                for _ in 0..2 {
                    let atom = (rng.random::<f64>() * k_true as f64) as usize % k_true;
                    let coef = rng.random::<f64>() + 0.5;
                    linalg::axpy(coef, &true_atoms[atom], &mut z);
                }
                z
            })
            .collect();
        Mat::from_columns(&cols).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_unit_norm() {
        let sample = sample_from_atoms(8, 5, 40, 1);
        let d1 = init_dictionary(&sample, 6, 7).unwrap();
        let d2 = init_dictionary(&sample, 6, 7).unwrap();
        assert_eq!(d1, d2);
        let d3 = init_dictionary(&sample, 6, 8).unwrap();
        assert_ne!(d1, d3);
        for j in 0..6 {
            assert_abs_diff_eq!(norm2(d1.atoms().col(j)), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn init_rejects_small_samples() {
        let sample = sample_from_atoms(4, 2, 10, 3);
        assert!(init_dictionary(&sample, 128, 0).is_err());
    }

    #[test]
    fn learning_reduces_risk_on_structured_data() {
        let sample = sample_from_atoms(8, 4, 160, 5);
        let cfg = LearnerConfig {
            k: 6,
            lambda: 0.2,
            iterations: 5,
            batch_size: 32,
            seed: 3,
            lars_max_steps: 100,
        };
        let init = init_dictionary(&sample, cfg.k, cfg.seed).unwrap();
        let risk_before = empirical_risk(&sample, &init, cfg.lambda, cfg.lars_max_steps);
        let learned = learn_dictionary(&sample, &cfg).unwrap();
        let risk_after = empirical_risk(&sample, &learned, cfg.lambda, cfg.lars_max_steps);
        assert!(
            risk_after <= risk_before,
            "risk went up: {} -> {}",
            risk_before,
            risk_after
        );
        for j in 0..cfg.k {
            assert_abs_diff_eq!(norm2(learned.atoms().col(j)), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn accumulator_stays_symmetric_psd() {
        let sample = sample_from_atoms(6, 3, 80, 9);
        let cfg = LearnerConfig {
            k: 4,
            lambda: 0.15,
            iterations: 2,
            batch_size: 16,
            seed: 1,
            lars_max_steps: 100,
        };
        let mut learner = DictionaryLearner::init(&sample, cfg).unwrap();
        learner.run_pass(&sample, 0).unwrap();
        learner.run_pass(&sample, 1).unwrap();
        let a = learner.state().a();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(a.get(i, j), a.get(j, i), epsilon = 1e-12);
            }
        }
        let (eig, _) = linalg::jacobi_eigh(a);
        for &e in &eig {
            assert!(e >= -1e-8, "A has negative eigenvalue {}", e);
        }
        assert!(learner.state().seen() >= 160);
    }

    #[test]
    fn all_zero_sample_leaves_atoms_unchanged() {
        // Init from a real sample, then run a pass over all-zero patches:
        // codes are zero, accumulators never move, atoms stay put.
        let sample = sample_from_atoms(6, 3, 30, 11);
        let cfg = LearnerConfig {
            k: 4,
            lambda: 0.2,
            iterations: 1,
            batch_size: 8,
            seed: 2,
            lars_max_steps: 50,
        };
        let mut learner = DictionaryLearner::init(&sample, cfg).unwrap();
        let before = learner.dictionary().clone();
        let zeros = Mat::zeros(6, 30);
        learner.run_pass(&zeros, 0).unwrap();
        assert_eq!(&before, learner.dictionary());
    }

    #[test]
    fn dead_atom_replacement_matches_init_when_all_dead() {
        let sample = sample_from_atoms(6, 3, 50, 13);
        let cfg = LearnerConfig {
            k: 5,
            lambda: 0.2,
            iterations: 1,
            batch_size: 8,
            seed: 21,
            lars_max_steps: 50,
        };
        let dict = init_dictionary(&sample, cfg.k, 99).unwrap();
        let state = LearnerState::new(6, &cfg); // all-zero accumulators: every atom dead
        let replaced = replace_dead_atoms(&dict, &state, &sample, 42).unwrap();
        let fresh = init_dictionary(&sample, cfg.k, 42).unwrap();
        assert_eq!(replaced, fresh);
    }

    #[test]
    fn dead_atom_replacement_is_a_no_op_without_dead_atoms() {
        let sample = sample_from_atoms(6, 3, 50, 13);
        let cfg = LearnerConfig {
            k: 3,
            lambda: 0.2,
            iterations: 1,
            batch_size: 8,
            seed: 21,
            lars_max_steps: 50,
        };
        let dict = init_dictionary(&sample, cfg.k, 1).unwrap();
        let mut state = LearnerState::new(6, &cfg);
        for j in 0..3 {
            state.a.set(j, j, 1.0);
        }
        let replaced = replace_dead_atoms(&dict, &state, &sample, 42).unwrap();
        assert_eq!(replaced, dict);
    }

    #[test]
    fn single_dead_atom_is_replaced_with_unit_norm() {
        let sample = sample_from_atoms(6, 3, 50, 17);
        let cfg = LearnerConfig {
            k: 3,
            lambda: 0.2,
            iterations: 1,
            batch_size: 8,
            seed: 21,
            lars_max_steps: 50,
        };
        let dict = init_dictionary(&sample, cfg.k, 1).unwrap();
        let mut state = LearnerState::new(6, &cfg);
        state.a.set(0, 0, 1.0);
        // atom 1 dead
        state.a.set(2, 2, 1.0);
        let replaced = replace_dead_atoms(&dict, &state, &sample, 42).unwrap();
        assert_eq!(replaced.atoms().col(0), dict.atoms().col(0));
        assert_eq!(replaced.atoms().col(2), dict.atoms().col(2));
        assert_ne!(replaced.atoms().col(1), dict.atoms().col(1));
        assert_abs_diff_eq!(norm2(replaced.atoms().col(1)), 1.0, epsilon = 1e-12);
    }
}
