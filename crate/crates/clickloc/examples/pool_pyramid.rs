//! Lay out temporal-pyramid ROIs and pool one click's sparse codes into a
//! global feature, comparing sum-, ℓ3-, and (near-)max-pooling.
//!
//! ```bash
//! cargo run --release -p clickloc --example pool_pyramid
//! ```

use clickloc::coding::{encode_batch, Dictionary, EncoderConfig};
use clickloc::dataset::{generate_synthetic, SyntheticConfig};
use clickloc::eval::draw_patch_sample;
use clickloc::patching::{extract_patches, patch_offsets, PatchConfig};
use clickloc::pooling::{compute_rois, pool_click, PyramidLayer, PyramidSpec};

fn main() -> clickloc::Result<()> {
    let n = 2000;

    // One full-signal layer plus three non-overlapping thirds: 4 ROIs.
    let pyramid = PyramidSpec::two_layer_thirds();
    println!(
        "two-layer pyramid on n={}: D={} ROIs",
        n,
        pyramid.roi_count()
    );
    for roi in compute_rois(n, &pyramid)? {
        println!(
            "  layer {} start {:>5} len {:>5} weight {}",
            roi.layer, roi.start, roi.len, roi.weight
        );
    }

    // Overlapping half-windows shifted by a quarter: floor((1-a)/b+1) = 3.
    let halves = PyramidSpec::new(vec![PyramidLayer::new(0.5, 0.25, 1.0)])?;
    println!("\nhalf-window layer: D={} ROIs", halves.roi_count());
    for roi in compute_rois(n, &halves)? {
        println!(
            "  layer {} start {:>5} len {:>5}",
            roi.layer, roi.start, roi.len
        );
    }

    // Pool a real click's codes through the pyramid.
    let synth = SyntheticConfig {
        rng_seed: 9,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&synth, 12)?;
    let patch = PatchConfig::new(128, 500);
    let all: Vec<usize> = (0..ds.len()).collect();
    let sample = draw_patch_sample(&ds, &patch, &all, 3000, 1, "example", 0)?;
    let dict = clickloc::coding::init_dictionary(&sample, 24, 2)?;
    let _ = Dictionary::new(dict.atoms().clone())?; // atoms are unit-norm

    let patches = extract_patches(&ds.clicks()[0], &patch)?;
    let codes = encode_batch(&patches, &dict, &EncoderConfig::default())?;
    let offsets = patch_offsets(n, patch.p, patch.patches_per_click);

    println!("\npooled feature dimension d = D·k:");
    for (name, mu) in [
        ("sum (mu=1)", 1.0),
        ("mu=3", 3.0),
        ("near-max (mu=50)", 50.0),
    ] {
        let feat = pool_click(&codes, &offsets, n, &pyramid, mu)?;
        let max = feat.values.iter().fold(0.0f64, |m, &v| m.max(v));
        let nonzero = feat.values.iter().filter(|&&v| v > 0.0).count();
        println!(
            "  {:<18} d={} ({} nonzero), largest entry {:.4}",
            name,
            feat.values.len(),
            nonzero,
            max
        );
    }
    Ok(())
}
