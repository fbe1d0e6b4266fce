//! Learn a dictionary on synthetic click patches and watch the regularized
//! empirical risk fall on a held-out validation batch, pass by pass.
//!
//! ```bash
//! cargo run --release -p clickloc --example learn_dictionary
//! ```

use clickloc::coding::{empirical_risk, DictionaryLearner, LearnerConfig};
use clickloc::dataset::{generate_synthetic, SyntheticConfig};
use clickloc::eval::draw_patch_sample;
use clickloc::patching::PatchConfig;

fn main() -> clickloc::Result<()> {
    let synth = SyntheticConfig {
        n: 1000,
        noise_std: 1e-3,
        rng_seed: 5,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&synth, 60)?;
    let patch = PatchConfig::new(64, 200);

    // 8000 training patches, 1000 held out for monitoring.
    let all: Vec<usize> = (0..ds.len()).collect();
    let sample = draw_patch_sample(&ds, &patch, &all, 9000, 77, "example", 0)?;
    let train = sample.select_columns(&(0..8000).collect::<Vec<_>>());
    let valid = sample.select_columns(&(8000..9000).collect::<Vec<_>>());

    let cfg = LearnerConfig {
        k: 32,
        lambda: 0.2,
        iterations: 8,
        batch_size: 256,
        seed: 13,
        lars_max_steps: 400,
    };
    let mut learner = DictionaryLearner::init(&train, cfg)?;
    let initial = empirical_risk(&valid, learner.dictionary(), 0.2, 400);
    println!("init     validation risk {:.6}", initial);
    for pass in 0..8 {
        learner.run_pass(&train, pass)?;
        let risk = empirical_risk(&valid, learner.dictionary(), 0.2, 400);
        let dead = learner.state().dead_atoms().len();
        println!(
            "pass {:>2}  validation risk {:.6}  ({} dead atoms, {} patches seen)",
            pass + 1,
            risk,
            dead,
            learner.state().seen()
        );
    }
    println!(
        "\nfinal dictionary: {} atoms of dimension {}",
        learner.dictionary().k(),
        learner.dictionary().dim()
    );
    Ok(())
}
