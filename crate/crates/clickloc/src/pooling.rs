//! ℓμ-norm pooling of sparse codes over a temporal pyramid.
//!
//! A pyramid layer `(a, b, Ω)` divides a click of `n` samples into
//! `D_i = ⌊(1-a)/b + 1⌋` regions of interest of `⌊a·n⌋` samples, shifted by
//! `⌊b·n⌋` samples and clamped to stay inside the signal, all weighted by
//! `Ω`. Within each ROI, every dictionary row of the code matrix is reduced
//! to a single statistic `(Σ|v|^μ)^{1/μ}`, which sweeps from sum-pooling
//! (μ=1) to max-pooling (μ→∞). The pooled blocks are concatenated in
//! (layer, roi, atom) order into one global feature of dimension D·k.
//!
//! Note on the layer arithmetic: the ROI-count formula above is authoritative
//! here. For a layer `(1/2, 1/4, ·)` it yields 3 ROIs (starts 0, n/4, n/2),
//! not 4 — configurations wanting 4 half-windows need `b = 1/6`.

use crate::coding::SparseCodeSet;
use crate::error::{Error, Result};

/// One pyramid layer: subdivision ratio `a`, overlap ratio `b`, weight Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyramidLayer {
    /// ROI length as a fraction of the click, in (0, 1].
    pub subdivision: f64,
    /// ROI shift as a fraction of the click, in (0, 1].
    pub overlap: f64,
    /// Weight applied to every pooled value of this layer, > 0.
    pub weight: f64,
}

impl PyramidLayer {
    pub fn new(subdivision: f64, overlap: f64, weight: f64) -> Self {
        PyramidLayer {
            subdivision,
            overlap,
            weight,
        }
    }

    /// ROI count `⌊(1-a)/b + 1⌋` for this layer.
    pub fn roi_count(&self) -> usize {
        ((1.0 - self.subdivision) / self.overlap + 1.0).floor() as usize
    }
}

/// A temporal pyramid: an ordered list of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidSpec {
    layers: Vec<PyramidLayer>,
}

impl PyramidSpec {
    pub fn new(layers: Vec<PyramidLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("pyramid needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.subdivision > 0.0 && l.subdivision <= 1.0) {
                return Err(Error::Config(format!(
                    "pyramid layer {}: subdivision ratio {} must lie in (0, 1]",
                    i, l.subdivision
                )));
            }
            if !(l.overlap > 0.0 && l.overlap <= 1.0) {
                return Err(Error::Config(format!(
                    "pyramid layer {}: overlap ratio {} must lie in (0, 1]",
                    i, l.overlap
                )));
            }
            if !(l.weight > 0.0) {
                return Err(Error::Config(format!(
                    "pyramid layer {}: weight {} must be > 0",
                    i, l.weight
                )));
            }
        }
        Ok(PyramidSpec { layers })
    }

    /// The single-layer pyramid `[1, 1, 1]`: one ROI covering the whole click.
    pub fn single() -> Self {
        PyramidSpec {
            layers: vec![PyramidLayer::new(1.0, 1.0, 1.0)],
        }
    }

    /// Two layers `[[1,1,1], [1/3,1/3,1]]`: the whole signal plus three
    /// non-overlapping thirds, 4 ROIs total.
    pub fn two_layer_thirds() -> Self {
        PyramidSpec {
            layers: vec![
                PyramidLayer::new(1.0, 1.0, 1.0),
                PyramidLayer::new(1.0 / 3.0, 1.0 / 3.0, 1.0),
            ],
        }
    }

    pub fn layers(&self) -> &[PyramidLayer] {
        &self.layers
    }

    /// Total ROI count D = Σ D_i.
    pub fn roi_count(&self) -> usize {
        self.layers.iter().map(PyramidLayer::roi_count).sum()
    }

    /// Global feature dimension d = D·k for a dictionary of k atoms.
    pub fn feature_dim(&self, k: usize) -> usize {
        self.roi_count() * k
    }
}

/// A concrete ROI of the pyramid on a click of known length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roi {
    pub layer: usize,
    pub start: usize,
    pub len: usize,
    pub weight: f64,
}

/// Lay out the pyramid's ROIs over a click of `n` samples. Layer `i`
/// produces `D_i` ROIs of `⌊a_i·n⌋` samples at starts `j·⌊b_i·n⌋`, with the
/// start clamped so `start + len <= n`.
pub fn compute_rois(n: usize, spec: &PyramidSpec) -> Result<Vec<Roi>> {
    if n == 0 {
        return Err(Error::Config("click length n must be >= 1".into()));
    }
    let mut rois = Vec::with_capacity(spec.roi_count());
    for (i, layer) in spec.layers().iter().enumerate() {
        let len = (layer.subdivision * n as f64).floor() as usize;
        if len == 0 {
            return Err(Error::Config(format!(
                "pyramid layer {}: ROI length floor({}*{}) is 0",
                i, layer.subdivision, n
            )));
        }
        let shift = (layer.overlap * n as f64).floor() as usize;
        for j in 0..layer.roi_count() {
            let start = (j * shift).min(n - len);
            rois.push(Roi {
                layer: i,
                start,
                len,
                weight: layer.weight,
            });
        }
    }
    Ok(rois)
}

/// The pooled global feature x of one click, d = D·k values, all ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFeature {
    pub values: Vec<f64>,
    pub click_id: u64,
}

/// ℓμ-norm pooling `(Σ|v_m|^μ)^{1/μ}` of a response vector, μ ≠ 0.
///
/// Computed in scaled form — the largest magnitude is factored out — so large
/// μ (hundreds) neither overflows nor underflows. An empty vector pools to 0.
pub fn pool_lmu(v: &[f64], mu: f64) -> Result<f64> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::Config(format!(
            "pooling mu must be finite and nonzero, got {}",
            mu
        )));
    }
    Ok(pool_lmu_unchecked(v, mu))
}

fn pool_lmu_unchecked(v: &[f64], mu: f64) -> f64 {
    if mu == 1.0 {
        // Sum-pooling, kept free of the scaling round-trip.
        return v.iter().map(|x| x.abs()).sum();
    }
    let peak = v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let sum: f64 = v.iter().map(|&x| (x.abs() / peak).powf(mu)).sum();
    peak * sum.powf(1.0 / mu)
}

/// Pool one click's code matrix over the pyramid.
///
/// `patch_offsets` gives the start sample of each code column; a patch
/// belongs to an ROI when its start offset lies inside it. For every ROI and
/// every dictionary row, the member responses are ℓμ-pooled and scaled by the
/// layer weight; ROIs containing no patches contribute zeros. Blocks are
/// concatenated in (layer, roi, atom) order.
pub fn pool_click(
    codes: &SparseCodeSet,
    patch_offsets: &[usize],
    n: usize,
    spec: &PyramidSpec,
    mu: f64,
) -> Result<GlobalFeature> {
    pool_click_id(codes, patch_offsets, n, spec, mu, 0)
}

/// [`pool_click`] with an explicit click id stored in the feature.
pub fn pool_click_id(
    codes: &SparseCodeSet,
    patch_offsets: &[usize],
    n: usize,
    spec: &PyramidSpec,
    mu: f64,
    click_id: u64,
) -> Result<GlobalFeature> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::Config(format!(
            "pooling mu must be finite and nonzero, got {}",
            mu
        )));
    }
    if codes.count() != patch_offsets.len() {
        return Err(Error::Shape(format!(
            "{} code columns but {} patch offsets",
            codes.count(),
            patch_offsets.len()
        )));
    }
    let rois = compute_rois(n, spec)?;
    let k = codes.k();
    let mut values = Vec::with_capacity(rois.len() * k);
    let mut member_responses: Vec<f64> = Vec::with_capacity(patch_offsets.len());
    for roi in &rois {
        let lo = roi.start;
        let hi = roi.start + roi.len - 1;
        // Offsets are non-decreasing: locate the member range by scan.
        let members: Vec<usize> = patch_offsets
            .iter()
            .enumerate()
            .filter(|&(_, &o)| o >= lo && o <= hi)
            .map(|(idx, _)| idx)
            .collect();
        for atom in 0..k {
            if members.is_empty() {
                values.push(0.0);
                continue;
            }
            member_responses.clear();
            for &m in &members {
                member_responses.push(codes.codes().get(atom, m));
            }
            values.push(roi.weight * pool_lmu_unchecked(&member_responses, mu));
        }
    }
    Ok(GlobalFeature { values, click_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{encode_batch, Dictionary, EncoderConfig};
    use crate::dataset::ClickRecord;
    use crate::linalg::Mat;
    use crate::patching::{extract_patches, patch_offsets, PatchConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn mu_one_is_sum_of_absolute_values() {
        let v = [1.0, -2.0, 3.0, -0.5];
        assert_abs_diff_eq!(pool_lmu(&v, 1.0).unwrap(), 6.5, epsilon = 0.0);
    }

    #[test]
    fn mu_two_is_euclidean_norm() {
        assert_abs_diff_eq!(pool_lmu(&[3.0, 4.0], 2.0).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn large_mu_approaches_max() {
        // For any v of length L and μ > 0: max|v| <= pool <= max|v|·L^(1/μ),
        // and the gap closes as μ grows. For 100 uniform draws the bound at
        // μ=200 is max·100^(1/200) ≈ max·1.0233.
        let mut rng = crate::seed::stream_rng(3, "pool", 0);
        use rand::Rng;
        let v: Vec<f64> = (0..100).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let maxabs = v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let p200 = pool_lmu(&v, 200.0).unwrap();
        let p2000 = pool_lmu(&v, 2000.0).unwrap();
        assert!(p200 >= maxabs - 1e-12);
        assert!(p200 <= maxabs * 100f64.powf(1.0 / 200.0) + 1e-12);
        assert!(
            (p2000 - maxabs).abs() <= (p200 - maxabs).abs(),
            "gap must shrink with mu: {} vs {}",
            p2000 - maxabs,
            p200 - maxabs
        );

        // With a well-separated maximum the non-max terms vanish below f64
        // resolution and the pooled value equals the max exactly.
        let mut sep = vec![0.5; 100];
        sep[37] = 1.0;
        assert_eq!(pool_lmu(&sep, 200.0).unwrap(), 1.0);
    }

    #[test]
    fn mu_zero_is_rejected() {
        assert!(matches!(pool_lmu(&[1.0], 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn two_layer_pyramid_has_four_rois_on_2000_samples() {
        let spec = PyramidSpec::two_layer_thirds();
        assert_eq!(spec.roi_count(), 4);
        let rois = compute_rois(2000, &spec).unwrap();
        assert_eq!(rois.len(), 4);
        // Layer 0: everything.
        assert_eq!((rois[0].start, rois[0].len), (0, 2000));
        // Layer 1: three non-overlapping thirds.
        assert_eq!((rois[1].start, rois[1].len), (0, 666));
        assert_eq!((rois[2].start, rois[2].len), (666, 666));
        assert_eq!((rois[3].start, rois[3].len), (1332, 666));
    }

    #[test]
    fn single_layer_covers_the_whole_click() {
        let spec = PyramidSpec::single();
        assert_eq!(spec.roi_count(), 1);
        let rois = compute_rois(777, &spec).unwrap();
        assert_eq!(
            rois,
            vec![Roi {
                layer: 0,
                start: 0,
                len: 777,
                weight: 1.0
            }]
        );
    }

    #[test]
    fn half_window_quarter_shift_layer_follows_the_count_formula() {
        let spec = PyramidSpec::new(vec![PyramidLayer::new(0.5, 0.25, 1.0)]).unwrap();
        assert_eq!(spec.roi_count(), 3);
        let rois = compute_rois(2000, &spec).unwrap();
        assert_eq!(rois.len(), 3);
        assert_eq!((rois[0].start, rois[0].len), (0, 1000));
        assert_eq!((rois[1].start, rois[1].len), (500, 1000));
        assert_eq!((rois[2].start, rois[2].len), (1000, 1000));
    }

    #[test]
    fn tiny_roi_length_is_a_config_error() {
        let spec = PyramidSpec::new(vec![PyramidLayer::new(0.2, 0.2, 1.0)]).unwrap();
        assert!(matches!(compute_rois(3, &spec), Err(Error::Config(_))));
    }

    fn codes_for(
        click: &ClickRecord,
        p: usize,
        l: usize,
        k: usize,
    ) -> (crate::coding::SparseCodeSet, Vec<usize>) {
        let cfg = PatchConfig::new(p, l);
        let patches = extract_patches(click, &cfg).unwrap();
        let mut rng = crate::seed::stream_rng(5, "dict", 0);
        use rand::Rng;
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut c: Vec<f64> = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
                crate::linalg::normalize(&mut c);
                c
            })
            .collect();
        let dict = Dictionary::new(Mat::from_columns(&cols).unwrap()).unwrap();
        let codes = encode_batch(&patches, &dict, &EncoderConfig::default()).unwrap();
        let offsets = patch_offsets(click.samples.len(), p, l);
        (codes, offsets)
    }

    #[test]
    fn feature_dimension_is_roi_count_times_atoms() {
        let click = ClickRecord {
            samples: (0..120).map(|i| (i as f64 * 0.21).sin()).collect(),
            range_m: 1.0,
            azimuth_rad: 0.0,
            hydrophone_id: 0,
            click_id: 42,
        };
        let (codes, offsets) = codes_for(&click, 10, 24, 7);
        let spec = PyramidSpec::two_layer_thirds();
        let feat = pool_click_id(&codes, &offsets, 120, &spec, 3.0, 42).unwrap();
        assert_eq!(feat.values.len(), 4 * 7);
        assert_eq!(feat.values.len(), spec.feature_dim(7));
        assert_eq!(feat.click_id, 42);
        assert!(feat.values.iter().all(|&v| v >= 0.0 && v.is_finite()));

        let single = pool_click(&codes, &offsets, 120, &PyramidSpec::single(), 3.0).unwrap();
        assert_eq!(single.values.len(), 7);
    }

    #[test]
    fn full_signal_layer_pools_every_patch() {
        // With a_1 = 1 the layer-1 ROI spans the whole click, so its block
        // must equal pooling each code row over all L columns.
        let click = ClickRecord {
            samples: (0..120).map(|i| (i as f64 * 0.37).cos()).collect(),
            range_m: 1.0,
            azimuth_rad: 0.0,
            hydrophone_id: 0,
            click_id: 1,
        };
        let (codes, offsets) = codes_for(&click, 10, 24, 7);
        let feat = pool_click(&codes, &offsets, 120, &PyramidSpec::two_layer_thirds(), 3.0).unwrap();
        for atom in 0..7 {
            let row: Vec<f64> = (0..codes.count()).map(|m| codes.codes().get(atom, m)).collect();
            let want = pool_lmu(&row, 3.0).unwrap();
            assert_abs_diff_eq!(feat.values[atom], want, epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_codes_pool_to_zero_feature() {
        let click = ClickRecord {
            samples: vec![0.0; 60],
            range_m: 1.0,
            azimuth_rad: 0.0,
            hydrophone_id: 0,
            click_id: 0,
        };
        let (codes, offsets) = codes_for(&click, 6, 10, 4);
        let feat = pool_click(&codes, &offsets, 60, &PyramidSpec::two_layer_thirds(), 3.0).unwrap();
        assert_eq!(feat.values.len(), 16);
        assert!(feat.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn offsets_codes_mismatch_is_rejected() {
        let click = ClickRecord {
            samples: (0..60).map(|i| i as f64).collect(),
            range_m: 1.0,
            azimuth_rad: 0.0,
            hydrophone_id: 0,
            click_id: 0,
        };
        let (codes, _) = codes_for(&click, 6, 10, 4);
        let bad_offsets = vec![0usize; 9];
        assert!(matches!(
            pool_click(&codes, &bad_offsets, 60, &PyramidSpec::single(), 3.0),
            Err(Error::Shape(_))
        ));
    }

    proptest! {
        // Permutation invariance and absolute homogeneity of the pooling map.
        #[test]
        fn pooling_is_permutation_invariant_and_homogeneous(
            seed in 0u64..300,
            mu in prop::sample::select(vec![0.5f64, 1.0, 2.0, 3.0, 8.0, 20.0]),
            scale in -4.0f64..4.0,
        ) {
            use rand::Rng;
            let mut rng = crate::seed::stream_rng(seed, "pool-prop", 0);
            let len = 1 + (rng.random::<f64>() * 40.0) as usize;
            let v: Vec<f64> = (0..len).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let base = pool_lmu(&v, mu).unwrap();

            let mut shuffled = v.clone();
            shuffled.reverse();
            shuffled.rotate_left(len / 3);
            prop_assert!((pool_lmu(&shuffled, mu).unwrap() - base).abs() <= 1e-12 * base.max(1.0));

            let scaled: Vec<f64> = v.iter().map(|&x| scale * x).collect();
            let want = scale.abs() * base;
            let got = pool_lmu(&scaled, mu).unwrap();
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", got, want);
        }

        // Structural identity d = D·k over random pyramid specs.
        #[test]
        fn roi_count_matches_layer_formula(
            a1 in 0.05f64..1.0, b1 in 0.05f64..1.0,
            a2 in 0.05f64..1.0, b2 in 0.05f64..1.0,
            k in 1usize..40,
        ) {
            let spec = PyramidSpec::new(vec![
                PyramidLayer::new(a1, b1, 1.0),
                PyramidLayer::new(a2, b2, 0.5),
            ]).unwrap();
            let d1 = ((1.0 - a1) / b1 + 1.0).floor() as usize;
            let d2 = ((1.0 - a2) / b2 + 1.0).floor() as usize;
            prop_assert_eq!(spec.roi_count(), d1 + d2);
            prop_assert_eq!(spec.feature_dim(k), (d1 + d2) * k);
            let rois = compute_rois(5000, &spec).unwrap();
            prop_assert_eq!(rois.len(), d1 + d2);
            for r in &rois {
                prop_assert!(r.start + r.len <= 5000);
            }
        }
    }
}
