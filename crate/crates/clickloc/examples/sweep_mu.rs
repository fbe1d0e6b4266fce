//! Sweep the pooling exponent μ over the cross-validated harness with paired
//! splits and write the plot-ready CSV.
//!
//! ```bash
//! cargo run --release -p clickloc --example sweep_mu
//! ```

use clickloc::coding::EncoderConfig;
use clickloc::dataset::{generate_synthetic, SyntheticConfig};
use clickloc::eval::{make_splits, sweep, sweep_csv, ExperimentConfig, SweepAxis};
use clickloc::patching::PatchConfig;
use clickloc::pooling::PyramidSpec;
use clickloc::regress::TrainConfig;

fn main() -> clickloc::Result<()> {
    let synth = SyntheticConfig {
        n: 1000,
        noise_std: 1e-3,
        rng_seed: 21,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&synth, 90)?;

    let cfg = ExperimentConfig {
        patch: PatchConfig::new(64, 200),
        encoder: EncoderConfig::default(),
        k: 16,
        dict_iterations: 3,
        dict_batch_size: 256,
        dict_sample_max: 5000,
        pyramid: PyramidSpec::single(),
        mu: 3.0,
        train: TrainConfig::default(),
        c_grid: vec![1.0],
        seed: 31,
    };
    let splits = make_splits(&ds.hydrophone_ids(), 2, 0.7, 41)?;
    let mus = vec![1.0, 2.0, 3.0, 4.0, 8.0, 20.0];
    let results = sweep(&ds, &cfg, &SweepAxis::Mu(mus), &splits)?;

    println!("{:>6} {:>14} {:>14}", "mu", "range ARMSE", "azimuth ARMSE");
    for (mu, report) in &results {
        println!(
            "{:>6} {:>14.3} {:>14.4}",
            mu, report.range.normalized.global, report.azimuth.normalized.global
        );
    }

    let ids: Vec<u32> = ds.hydrophone_counts().keys().copied().collect();
    let out = std::env::temp_dir().join("clickloc_sweep_mu.csv");
    std::fs::write(&out, sweep_csv(&results, &ids))?;
    println!("\nfull per-round CSV written to {}", out.display());
    Ok(())
}
