//! Cross-validated evaluation on synthetic clicks: per-round stratified
//! splits, leak-free per-round training, and ARMSE against the train-mean
//! baseline for both targets.
//!
//! ```bash
//! cargo run --release -p clickloc --example crossval_synthetic
//! ```

use clickloc::coding::{EncodeMethod, EncoderConfig};
use clickloc::dataset::{generate_synthetic, SyntheticConfig};
use clickloc::eval::{make_splits, run_experiment, ExperimentConfig};
use clickloc::patching::PatchConfig;
use clickloc::pooling::PyramidSpec;
use clickloc::regress::{Loss, TrainConfig};

fn main() -> clickloc::Result<()> {
    let synth = SyntheticConfig {
        noise_std: 1e-3,
        rng_seed: 11,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&synth, 150)?;
    println!("dataset: {} clicks, n={}", ds.len(), ds.n());

    let cfg = ExperimentConfig {
        patch: PatchConfig::new(128, 400),
        encoder: EncoderConfig {
            method: EncodeMethod::LassoLars,
            lambda: 0.2,
            ..EncoderConfig::default()
        },
        k: 32,
        dict_iterations: 5,
        dict_batch_size: 256,
        dict_sample_max: 12_000,
        pyramid: PyramidSpec::single(),
        mu: 3.0,
        train: TrainConfig {
            loss: Loss::Squared,
            ..TrainConfig::default()
        },
        c_grid: vec![0.1, 1.0, 10.0],
        seed: 123,
    };
    let splits = make_splits(&ds.hydrophone_ids(), 3, 0.7, 99)?;
    println!(
        "protocol: K={} random splits, {} train / {} test each\n",
        splits.k,
        splits.rounds[0].train.len(),
        splits.rounds[0].test.len()
    );

    let t0 = std::time::Instant::now();
    let report = run_experiment(&ds, &cfg, &splits)?;
    for eval in [&report.range, &report.azimuth] {
        println!(
            "{:<8} ARMSE {:>9.3}   baseline {:>9.3}   ratio {:.3}",
            eval.target.name(),
            eval.normalized.global,
            eval.baseline_normalized.global,
            eval.normalized.global / eval.baseline_normalized.global
        );
        for (round, values) in eval.normalized.per_round.iter().enumerate() {
            let v = values.values().next().unwrap();
            println!("   round {}: {:.3}", round, v);
        }
    }
    println!("\nelapsed {:?}", t0.elapsed());
    Ok(())
}
