//! Slice a click into ℓ2-normalized local patches and decorrelate them with
//! a trained PCA projection.
//!
//! ```bash
//! cargo run --release -p clickloc --example extract_patches
//! ```

use clickloc::dataset::{generate_synthetic, SyntheticConfig};
use clickloc::linalg::{norm2, Mat};
use clickloc::patching::{extract_patches, fit_pca, patch_offsets, project, PatchConfig};

fn main() -> clickloc::Result<()> {
    let synth = SyntheticConfig {
        n: 2000,
        rng_seed: 3,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&synth, 8)?;
    let cfg = PatchConfig::new(128, 1000);

    // Offsets advance by ceil(n/L) samples and clamp at n-p.
    let offsets = patch_offsets(ds.n(), cfg.p, cfg.patches_per_click);
    println!(
        "n={} p={} L={}: stride {}, first offsets {:?}, last {:?}",
        ds.n(),
        cfg.p,
        cfg.patches_per_click,
        offsets[1] - offsets[0],
        &offsets[..4],
        &offsets[offsets.len() - 3..]
    );

    let patches = extract_patches(&ds.clicks()[0], &cfg)?;
    let norms: Vec<f64> = (0..5).map(|j| norm2(patches.columns().col(j))).collect();
    println!(
        "patch matrix: {}x{}, first column norms {:?}",
        patches.dim(),
        patches.count(),
        norms
    );

    // PCA on patches pooled from all clicks.
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for click in ds.clicks() {
        let pm = extract_patches(click, &cfg)?;
        for j in (0..pm.count()).step_by(10) {
            cols.push(pm.columns().col(j).to_vec());
        }
    }
    let sample = Mat::from_columns(&cols)?;
    let model = fit_pca(&sample, 16)?;
    println!(
        "\nPCA on {} patches -> {} dims, degenerate: {}",
        sample.cols(),
        model.output_dim(),
        model.is_degenerate()
    );
    let total: f64 = model.explained_variance().iter().sum();
    for (i, v) in model.explained_variance().iter().take(6).enumerate() {
        println!(
            "  component {}: variance {:.3e} ({:.1}%)",
            i,
            v,
            100.0 * v / total
        );
    }

    let projected = project(&patches, &model)?;
    println!(
        "\nprojected patch matrix: {}x{}",
        projected.dim(),
        projected.count()
    );
    Ok(())
}
