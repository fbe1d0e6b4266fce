//! Staged pipeline commands behind the CLI.
//!
//! Each command reads/writes the interchange formats defined in
//! [`crate::dataset`], [`crate::coding`], and [`crate::regress`]:
//!
//! - `gen`: synthetic clicks → CSV
//! - `train-dict`: clicks → `CCD1` dictionary (PCA, when enabled, is refit
//!   deterministically by `encode` from the same seed, so no separate file
//!   is needed)
//! - `encode`: clicks + dictionary → `CCF1` pooled-feature cache
//! - `train-eval`: feature cache → report CSV + `CCM1` model files
//! - `sweep`: μ or k sweep → CSV
//! - `pipeline`: all four stages in sequence into one output directory
//!
//! `pipeline` literally calls the stage commands, so running the stages by
//! hand with the same config and seed produces byte-identical artifacts.
//!
//! The feature cache stores only (range, azimuth) labels, so `train-eval`
//! reports a single pseudo-hydrophone `0`; per-hydrophone reporting is done
//! by `sweep`, which works from clicks.

use std::fs;
use std::path::{Path, PathBuf};

use crate::coding::{learn_dictionary, Dictionary, LearnerConfig};
use crate::config::PipelineConfig;
use crate::dataset::{
    generate_synthetic, load_clicks, load_features, save_clicks, save_features, ClickDataset,
    ClickFormat,
};
use crate::error::{Error, Result};
use crate::eval::{
    draw_patch_sample, encode_features, evaluate_features, make_splits, report_csv_header,
    report_csv_rows, sweep, sweep_csv, train_with_selection, SweepAxis,
};
use crate::linalg::Mat;
use crate::patching::{fit_pca, PcaModel};
use crate::regress::Target;
use crate::seed::derive_seed;

/// Generate `count` synthetic clicks and write them as CSV.
pub fn cmd_gen(cfg: &PipelineConfig, count: usize, out: &Path) -> Result<()> {
    cfg.validate()?;
    let ds = generate_synthetic(&cfg.synth, count)?;
    save_clicks(&ds, out, ClickFormat::Csv)
}

/// Optional PCA fit on a patch sample, returning the model and the sample
/// projected into coding space.
fn fit_projection(sample: Mat, pca_dims: Option<usize>) -> Result<(Option<PcaModel>, Mat)> {
    match pca_dims {
        None => Ok((None, sample)),
        Some(pp) => {
            let model = fit_pca(&sample, pp)?;
            let mut projected = Mat::zeros(model.output_dim(), sample.cols());
            for j in 0..sample.cols() {
                let v = model.project_vec(sample.col(j))?;
                projected.col_mut(j).copy_from_slice(&v);
            }
            Ok((Some(model), projected))
        }
    }
}

/// The deterministic PCA/dictionary patch sample used by the staged
/// commands: drawn from all clicks with the `(seed, "dict-sample-full")`
/// stream, so `train-dict` and `encode` reconstruct the same PCA model.
fn staged_sample(cfg: &PipelineConfig, ds: &ClickDataset) -> Result<Mat> {
    let all: Vec<usize> = (0..ds.len()).collect();
    draw_patch_sample(
        ds,
        &cfg.experiment.patch,
        &all,
        cfg.experiment.dict_sample_max,
        cfg.seed,
        "dict-sample-full",
        0,
    )
}

/// Train a dictionary on patches drawn from the given clicks file.
pub fn cmd_train_dict(
    cfg: &PipelineConfig,
    clicks: &Path,
    format: ClickFormat,
    dict_out: &Path,
) -> Result<()> {
    cfg.validate()?;
    let ds = load_clicks(clicks, format)?;
    if ds.is_empty() {
        return Err(Error::Config("clicks file contains no clicks".into()));
    }
    cfg.experiment.validate(ds.n())?;
    let sample = staged_sample(cfg, &ds)?;
    let (_pca, dict_input) = fit_projection(sample, cfg.experiment.patch.pca_dims)?;
    let learner = LearnerConfig {
        k: cfg.experiment.k,
        lambda: cfg.experiment.encoder.lambda,
        iterations: cfg.experiment.dict_iterations,
        batch_size: cfg.experiment.dict_batch_size,
        seed: derive_seed(cfg.seed, "dict-full", 0),
        lars_max_steps: cfg.experiment.encoder.lars_max_steps,
    };
    let dict = learn_dictionary(&dict_input, &learner)?;
    dict.save(dict_out)
}

/// Encode and pool every click against a trained dictionary, writing the
/// `CCF1` feature cache.
pub fn cmd_encode_pool(
    cfg: &PipelineConfig,
    clicks: &Path,
    format: ClickFormat,
    dict_path: &Path,
    features_out: &Path,
) -> Result<()> {
    cfg.validate()?;
    let ds = load_clicks(clicks, format)?;
    if ds.is_empty() {
        return Err(Error::Config("clicks file contains no clicks".into()));
    }
    cfg.experiment.validate(ds.n())?;
    let dict = Dictionary::load(dict_path)?;
    let expected = cfg.experiment.patch.output_dim();
    if dict.dim() != expected {
        return Err(Error::Shape(format!(
            "dictionary has patch dimension {}, config expects {}",
            dict.dim(),
            expected
        )));
    }
    let pca = match cfg.experiment.patch.pca_dims {
        None => None,
        Some(_) => {
            let sample = staged_sample(cfg, &ds)?;
            fit_projection(sample, cfg.experiment.patch.pca_dims)?.0
        }
    };
    let all: Vec<usize> = (0..ds.len()).collect();
    let features = encode_features(&ds, &cfg.experiment, &pca, &dict, &all)?;
    let labels: Vec<(f64, f64)> = ds
        .clicks()
        .iter()
        .map(|c| (c.range_m, c.azimuth_rad))
        .collect();
    save_features(&features, &labels, features_out)
}

/// Cross-validate regressors on a feature cache; writes `report.csv` and the
/// final `model_range.ccm` / `model_azimuth.ccm` trained on all features.
pub fn cmd_train_eval(cfg: &PipelineConfig, features_path: &Path, out_dir: &Path) -> Result<()> {
    cfg.validate()?;
    let (features, labels) = load_features(features_path)?;
    if features.len() < 2 {
        return Err(Error::Config(format!(
            "feature cache holds {} features; need at least 2",
            features.len()
        )));
    }
    let feat_mat = Mat::from_columns(
        &features
            .iter()
            .map(|f| f.values.clone())
            .collect::<Vec<_>>(),
    )?;
    // The cache carries no hydrophone ids: everything reports as hydrophone 0.
    let hydro_ids = vec![0u32; features.len()];
    let splits = make_splits(
        &hydro_ids,
        cfg.folds,
        cfg.train_fraction,
        derive_seed(cfg.seed, "eval-split", 0),
    )?;
    let mut report = evaluate_features(&feat_mat, &labels, &hydro_ids, &cfg.experiment, &splits)?;
    // The CSV's seed column carries the root seed a rerun needs.
    report.seed = cfg.seed;

    fs::create_dir_all(out_dir)?;
    let mut csv = report_csv_header(&[0]);
    csv.push_str(&report_csv_rows(0.0, &report, &[0]));
    fs::write(out_dir.join("report.csv"), csv)?;

    // Deployment models: trained on the full cache, C selected on a nested
    // split in a stream distinct from every round's.
    let ranges: Vec<f64> = labels.iter().map(|l| l.0).collect();
    let azimuths: Vec<f64> = labels.iter().map(|l| l.1).collect();
    let tag = cfg.folds as u64;
    let range_model =
        train_with_selection(&feat_mat, &ranges, Target::Range, &cfg.experiment, tag)?;
    let azimuth_model =
        train_with_selection(&feat_mat, &azimuths, Target::Azimuth, &cfg.experiment, tag)?;
    range_model.save(&out_dir.join("model_range.ccm"))?;
    azimuth_model.save(&out_dir.join("model_azimuth.ccm"))?;
    Ok(())
}

/// Sweep μ or k over the full no-leakage harness and write the CSV. With no
/// clicks file, a synthetic dataset of `[dataset] count` clicks is generated.
pub fn cmd_sweep(
    cfg: &PipelineConfig,
    axis: &SweepAxis,
    clicks: Option<(&Path, ClickFormat)>,
    out: &Path,
) -> Result<()> {
    cfg.validate()?;
    let ds = match clicks {
        Some((path, format)) => load_clicks(path, format)?,
        None => generate_synthetic(&cfg.synth, cfg.synth_count)?,
    };
    if ds.is_empty() {
        return Err(Error::Config("sweep needs a nonempty dataset".into()));
    }
    let splits = make_splits(
        &ds.hydrophone_ids(),
        cfg.folds,
        cfg.train_fraction,
        derive_seed(cfg.seed, "sweep-split", 0),
    )?;
    let mut results = sweep(&ds, &cfg.experiment, axis, &splits)?;
    for (_, report) in results.iter_mut() {
        report.seed = cfg.seed;
    }
    let ids: Vec<u32> = ds.hydrophone_counts().keys().copied().collect();
    fs::write(out, sweep_csv(&results, &ids))?;
    Ok(())
}

/// Full pipeline: gen → train-dict → encode → train-eval, all artifacts in
/// one directory. Identical to running the four stages by hand.
pub fn cmd_pipeline(cfg: &PipelineConfig, out_dir: Option<&Path>) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = out_dir.unwrap_or(&cfg.out_dir).to_path_buf();
    fs::create_dir_all(&dir)?;
    let clicks = dir.join("clicks.csv");
    let dict = dir.join("dictionary.ccd");
    let features = dir.join("features.ccf");
    cmd_gen(cfg, cfg.synth_count, &clicks)?;
    cmd_train_dict(cfg, &clicks, ClickFormat::Csv, &dict)?;
    cmd_encode_pool(cfg, &clicks, ClickFormat::Csv, &dict, &features)?;
    cmd_train_eval(cfg, &features, &dir)?;
    Ok(dir)
}
