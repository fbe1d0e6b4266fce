//! Local patch extraction and optional PCA decorrelation.
//!
//! Each click of length `n` yields `L` patches of `p` samples whose start
//! offsets are `min(l·⌈n/L⌉, n-p)` for `l = 0..L-1`: equally spaced with the
//! trailing ones clamped so every patch stays inside the signal. Patches are
//! ℓ2-normalized (all-zero patches are left as zeros), then optionally
//! projected onto the top `p'` principal directions of a training sample.

use crate::dataset::ClickRecord;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Patch extraction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchConfig {
    /// Patch length in samples.
    pub p: usize,
    /// Patches per click (L).
    pub patches_per_click: usize,
    /// PCA output dimension p' ≤ p, or `None` to skip projection.
    pub pca_dims: Option<usize>,
    /// Subtract each patch's mean before normalizing. Off by default.
    pub mean_center: bool,
}

impl PatchConfig {
    pub fn new(p: usize, patches_per_click: usize) -> Self {
        PatchConfig {
            p,
            patches_per_click,
            pca_dims: None,
            mean_center: false,
        }
    }

    /// Validate against a click length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("patch length p must be >= 1".into()));
        }
        if self.p > n {
            return Err(Error::Config(format!(
                "patch length p={} exceeds click length n={}",
                self.p, n
            )));
        }
        if self.patches_per_click == 0 {
            return Err(Error::Config("patches_per_click must be >= 1".into()));
        }
        if let Some(pp) = self.pca_dims {
            if pp == 0 || pp > self.p {
                return Err(Error::Config(format!(
                    "pca_dims={} must satisfy 1 <= pca_dims <= p={}",
                    pp, self.p
                )));
            }
        }
        Ok(())
    }

    /// Dimension of patches after optional PCA.
    pub fn output_dim(&self) -> usize {
        self.pca_dims.unwrap_or(self.p)
    }
}

/// `L` patch columns extracted from one click.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    columns: Mat,
    source_click_id: u64,
}

impl PatchMatrix {
    pub fn columns(&self) -> &Mat {
        &self.columns
    }

    pub fn source_click_id(&self) -> u64 {
        self.source_click_id
    }

    /// Patch dimension (p, or p' after projection).
    pub fn dim(&self) -> usize {
        self.columns.rows()
    }

    pub fn count(&self) -> usize {
        self.columns.cols()
    }
}

/// Start offsets of the `l` patches for a click of length `n`:
/// `min(l·⌈n/l_count⌉, n-p)`. Non-decreasing, all within `[0, n-p]`.
pub fn patch_offsets(n: usize, p: usize, l_count: usize) -> Vec<usize> {
    let stride = n.div_ceil(l_count);
    (0..l_count).map(|l| (l * stride).min(n - p)).collect()
}

/// Extract the ℓ2-normalized patch matrix of one click.
pub fn extract_patches(click: &ClickRecord, cfg: &PatchConfig) -> Result<PatchMatrix> {
    let n = click.samples.len();
    cfg.validate(n)?;
    let offsets = patch_offsets(n, cfg.p, cfg.patches_per_click);
    let mut columns = Mat::zeros(cfg.p, offsets.len());
    for (j, &o) in offsets.iter().enumerate() {
        let col = columns.col_mut(j);
        col.copy_from_slice(&click.samples[o..o + cfg.p]);
        if cfg.mean_center {
            let mean = col.iter().sum::<f64>() / cfg.p as f64;
            for v in col.iter_mut() {
                *v -= mean;
            }
        }
        linalg::normalize(col);
    }
    Ok(PatchMatrix {
        columns,
        source_click_id: click.click_id,
    })
}

/// Trained PCA projection for patch decorrelation.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// p × p' matrix with orthonormal columns.
    basis: Mat,
    /// Variance captured by each component, non-increasing, ≥ 0.
    explained_variance: Vec<f64>,
    /// Set when the training sample had rank < p'; the trailing components
    /// then carry zero variance.
    degenerate: bool,
}

impl PcaModel {
    /// Identity model: p' = p, zero mean. Projection is a no-op.
    pub fn identity(p: usize) -> Self {
        PcaModel {
            mean: vec![0.0; p],
            basis: Mat::identity(p),
            explained_variance: vec![0.0; p],
            degenerate: false,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Project a single vector: basisᵀ·(x - mean).
    pub fn project_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "vector has dimension {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok(self.basis.tr_matvec(&centered))
    }
}

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// variance (degenerate sample directions).
const VARIANCE_REL_TOL: f64 = 1e-12;

/// Fit a PCA model on a sample of patch columns (p × m matrix).
///
/// Components are the top `p_prime` eigenvectors of the sample covariance,
/// ordered by decreasing variance. Signs are fixed by making the
/// largest-magnitude entry of each basis column positive, so the fit is
/// fully deterministic. If the sample has rank < `p_prime`, the trailing
/// components get zero variance and the model is flagged degenerate.
pub fn fit_pca(sample: &Mat, p_prime: usize) -> Result<PcaModel> {
    let p = sample.rows();
    let m = sample.cols();
    if p_prime == 0 || p_prime > p {
        return Err(Error::Config(format!(
            "p_prime={} must satisfy 1 <= p_prime <= {}",
            p_prime, p
        )));
    }
    if m < p_prime {
        return Err(Error::Config(format!(
            "PCA sample of {} patches is smaller than p_prime={}",
            m, p_prime
        )));
    }

    let mut mean = vec![0.0; p];
    for j in 0..m {
        linalg::axpy(1.0, sample.col(j), &mut mean);
    }
    for v in mean.iter_mut() {
        *v /= m as f64;
    }

    let denom = if m > 1 { (m - 1) as f64 } else { 1.0 };
    let mut cov = Mat::zeros(p, p);
    let mut centered = vec![0.0; p];
    for j in 0..m {
        for (c, (&s, &mu)) in centered.iter_mut().zip(sample.col(j).iter().zip(&mean)) {
            *c = s - mu;
        }
        for b in 0..p {
            let cb = centered[b];
            if cb == 0.0 {
                continue;
            }
            let col = cov.col_mut(b);
            for (a, &ca) in centered.iter().enumerate() {
                col[a] += ca * cb / denom;
            }
        }
    }

    let (eig, vectors) = linalg::jacobi_eigh(&cov);
    let max_eig = eig.first().copied().unwrap_or(0.0).max(0.0);
    let floor = max_eig * VARIANCE_REL_TOL;

    let mut basis = Mat::zeros(p, p_prime);
    let mut explained = Vec::with_capacity(p_prime);
    let mut degenerate = false;
    for c in 0..p_prime {
        let mut col = vectors.col(c).to_vec();
        // Deterministic sign: largest-magnitude entry positive.
        let mut arg = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[arg].abs() {
                arg = i;
            }
        }
        if col[arg] < 0.0 {
            for v in col.iter_mut() {
                *v = -*v;
            }
        }
        basis.col_mut(c).copy_from_slice(&col);
        let var = eig[c];
        if var <= floor {
            explained.push(0.0);
            degenerate = true;
        } else {
            explained.push(var);
        }
    }

    Ok(PcaModel {
        mean,
        basis,
        explained_variance: explained,
        degenerate,
    })
}

/// Project every patch column through the model, yielding p'-dimensional
/// columns.
pub fn project(patches: &PatchMatrix, model: &PcaModel) -> Result<PatchMatrix> {
    if patches.dim() != model.input_dim() {
        return Err(Error::Shape(format!(
            "patches have dimension {}, PCA model expects {}",
            patches.dim(),
            model.input_dim()
        )));
    }
    let mut out = Mat::zeros(model.output_dim(), patches.count());
    for j in 0..patches.count() {
        let projected = model.project_vec(patches.columns().col(j))?;
        out.col_mut(j).copy_from_slice(&projected);
    }
    Ok(PatchMatrix {
        columns: out,
        source_click_id: patches.source_click_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm2};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn click(samples: Vec<f64>) -> ClickRecord {
        ClickRecord {
            samples,
            range_m: 100.0,
            azimuth_rad: 0.0,
            hydrophone_id: 0,
            click_id: 9,
        }
    }

    #[test]
    fn offsets_follow_stride_and_clamp() {
        // n=2000, L=1000 → stride 2.
        let offs = patch_offsets(2000, 128, 1000);
        assert_eq!(offs[0], 0);
        assert_eq!(offs[1], 2);
        assert_eq!(offs[935], 1870);
        assert_eq!(offs[999], 2000 - 128); // clamped tail
                                           // n=10, p=4, L=4 → 0,3,6,6.
        assert_eq!(patch_offsets(10, 4, 4), vec![0, 3, 6, 6]);
    }

    #[test]
    fn patches_are_unit_norm_and_zero_safe() {
        let c = click((0..40).map(|i| (i as f64 * 0.3).sin()).collect());
        let cfg = PatchConfig::new(8, 10);
        let pm = extract_patches(&c, &cfg).unwrap();
        assert_eq!(pm.count(), 10);
        for j in 0..pm.count() {
            assert_abs_diff_eq!(norm2(pm.columns().col(j)), 1.0, epsilon = 1e-12);
        }

        let z = click(vec![0.0; 40]);
        let pm = extract_patches(&z, &cfg).unwrap();
        for j in 0..pm.count() {
            assert!(pm.columns().col(j).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn patch_longer_than_click_is_config_error() {
        let c = click(vec![1.0; 10]);
        let cfg = PatchConfig::new(11, 2);
        assert!(matches!(extract_patches(&c, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn pca_recovers_rank_two_subspace() {
        // Columns live in span{u, v} ⊂ R^8.
        let u: Vec<f64> = (0..8).map(|i| ((i as f64) * 0.7).sin()).collect();
        let v: Vec<f64> = (0..8).map(|i| ((i as f64) * 1.3).cos()).collect();
        let cols: Vec<Vec<f64>> = (0..40)
            .map(|t| {
                let a = (t as f64 * 0.11).sin() * 2.0;
                let b = (t as f64 * 0.23).cos();
                (0..8).map(|i| a * u[i] + b * v[i]).collect()
            })
            .collect();
        let sample = Mat::from_columns(&cols).unwrap();
        let model = fit_pca(&sample, 2).unwrap();
        assert!(!model.is_degenerate());

        // Reconstruction error of every sample column is ~0.
        for j in 0..sample.cols() {
            let proj = model.project_vec(sample.col(j)).unwrap();
            let mut recon = model.mean().to_vec();
            for (c, &w) in proj.iter().enumerate() {
                linalg::axpy(w, model.basis().col(c), &mut recon);
            }
            let err: f64 = recon
                .iter()
                .zip(sample.col(j))
                .map(|(r, s)| (r - s) * (r - s))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10, "reconstruction error {}", err);
        }

        // Fitting more components than the rank flags degeneracy.
        let model4 = fit_pca(&sample, 4).unwrap();
        assert!(model4.is_degenerate());
        assert_eq!(model4.explained_variance()[2], 0.0);
        assert_eq!(model4.explained_variance()[3], 0.0);
    }

    #[test]
    fn full_rank_projection_is_isometric() {
        let cols: Vec<Vec<f64>> = (0..30)
            .map(|t| (0..6).map(|i| ((t * 6 + i) as f64 * 0.37).sin()).collect())
            .collect();
        let sample = Mat::from_columns(&cols).unwrap();
        let model = fit_pca(&sample, 6).unwrap();
        // basisᵀ basis = I.
        for a in 0..6 {
            for b in 0..6 {
                let v = dot(model.basis().col(a), model.basis().col(b));
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v, want, epsilon = 1e-10);
            }
        }
        // Pairwise distances preserved.
        for (i, j) in [(0, 1), (3, 17), (9, 22)] {
            let pi = model.project_vec(sample.col(i)).unwrap();
            let pj = model.project_vec(sample.col(j)).unwrap();
            let dp: f64 = pi
                .iter()
                .zip(&pj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let dx: f64 = sample
                .col(i)
                .iter()
                .zip(sample.col(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert_abs_diff_eq!(dp, dx, epsilon = 1e-10);
        }
    }

    #[test]
    fn repeated_patch_sample_is_degenerate() {
        let col: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let cols = vec![col; 12];
        let sample = Mat::from_columns(&cols).unwrap();
        let model = fit_pca(&sample, 3).unwrap();
        assert!(model.is_degenerate());
        assert!(model.explained_variance().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_model_projection_is_a_no_op() {
        let c = click((0..20).map(|i| (i as f64).cos()).collect());
        let cfg = PatchConfig::new(5, 6);
        let pm = extract_patches(&c, &cfg).unwrap();
        let out = project(&pm, &PcaModel::identity(5)).unwrap();
        assert_eq!(pm.columns(), out.columns());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let c = click(vec![1.0; 20]);
        let pm = extract_patches(&c, &PatchConfig::new(5, 4)).unwrap();
        let model = PcaModel::identity(7);
        assert!(matches!(project(&pm, &model), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn offsets_are_sorted_and_in_bounds(n in 1usize..400, p_rel in 0.01f64..1.0, l in 1usize..64) {
            let p = ((n as f64 * p_rel).ceil() as usize).clamp(1, n);
            let offs = patch_offsets(n, p, l);
            prop_assert_eq!(offs.len(), l);
            for w in offs.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for &o in &offs {
                prop_assert!(o + p <= n);
            }
        }

        #[test]
        fn every_patch_has_norm_zero_or_one(seed in 0u64..500) {
            let n = 50;
            let samples: Vec<f64> = (0..n)
                .map(|i| if (seed + i as u64) % 7 == 0 { 0.0 } else { ((seed as f64) + i as f64 * 0.9).sin() })
                .collect();
            let c = click(samples);
            let pm = extract_patches(&c, &PatchConfig::new(6, 12)).unwrap();
            for j in 0..pm.count() {
                let nrm = norm2(pm.columns().col(j));
                prop_assert!(nrm == 0.0 || (nrm - 1.0).abs() < 1e-12);
            }
        }
    }
}
