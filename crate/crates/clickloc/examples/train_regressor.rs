//! Fit the per-target linear models on pooled features from a small
//! synthetic dataset and inspect train-set predictions for both losses.
//!
//! ```bash
//! cargo run --release -p clickloc --example train_regressor
//! ```

use clickloc::coding::{EncodeMethod, EncoderConfig};
use clickloc::dataset::{generate_synthetic, SyntheticConfig};
use clickloc::eval::{draw_patch_sample, encode_features, ExperimentConfig};
use clickloc::linalg::Mat;
use clickloc::patching::PatchConfig;
use clickloc::pooling::PyramidSpec;
use clickloc::regress::{predict, train_traced, Loss, Target, TrainConfig};

fn main() -> clickloc::Result<()> {
    let synth = SyntheticConfig {
        n: 1000,
        noise_std: 1e-3,
        rng_seed: 15,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&synth, 80)?;

    let cfg = ExperimentConfig {
        patch: PatchConfig::new(64, 250),
        encoder: EncoderConfig {
            method: EncodeMethod::LassoLars,
            lambda: 0.2,
            ..EncoderConfig::default()
        },
        k: 24,
        dict_iterations: 4,
        dict_batch_size: 256,
        dict_sample_max: 6000,
        pyramid: PyramidSpec::single(),
        mu: 3.0,
        train: TrainConfig::default(),
        c_grid: vec![1.0],
        seed: 19,
    };

    let all: Vec<usize> = (0..ds.len()).collect();
    let sample = draw_patch_sample(
        &ds,
        &cfg.patch,
        &all,
        cfg.dict_sample_max,
        cfg.seed,
        "example",
        0,
    )?;
    let dict = clickloc::coding::learn_dictionary(
        &sample,
        &clickloc::coding::LearnerConfig {
            k: cfg.k,
            lambda: cfg.encoder.lambda,
            iterations: cfg.dict_iterations,
            batch_size: cfg.dict_batch_size,
            seed: cfg.seed,
            lars_max_steps: 400,
        },
    )?;
    let features = encode_features(&ds, &cfg, &None, &dict, &all)?;
    let x = Mat::from_columns(
        &features
            .iter()
            .map(|f| f.values.clone())
            .collect::<Vec<_>>(),
    )?;
    let ranges: Vec<f64> = ds.clicks().iter().map(|c| c.range_m).collect();

    for loss in [Loss::Squared, Loss::Logistic] {
        let tc = TrainConfig {
            loss,
            c: 1.0,
            ..TrainConfig::default()
        };
        let (model, trace) = train_traced(&x, &ranges, Target::Range, &tc)?;
        let rmse: f64 = (0..x.cols())
            .map(|i| {
                let p = predict(&model, x.col(i)).unwrap();
                (p - ranges[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
            / (x.cols() as f64).sqrt();
        println!(
            "{:?}: {} solver iterations, objective {:.4} -> {:.4}, train RMSE {:.1} m (converged: {})",
            loss,
            trace.len() - 1,
            trace.first().unwrap(),
            trace.last().unwrap(),
            rmse,
            model.converged
        );
    }

    println!("\nfirst five clicks, squared-loss model:");
    let model = clickloc::regress::train(&x, &ranges, Target::Range, &TrainConfig::default())?;
    for i in 0..5 {
        let p = predict(&model, x.col(i))?;
        println!(
            "  click {}: true {:>7.1} m  predicted {:>7.1} m",
            i, ranges[i], p
        );
    }
    Ok(())
}
