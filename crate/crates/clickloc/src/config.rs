//! Pipeline configuration file: a flat key-value format with one section per
//! module. Lines are `key = value`, sections are `[name]`, `#` starts a
//! comment. Unknown sections or keys are hard errors so typos cannot silently
//! fall back to defaults. Every key is optional; defaults follow the
//! reference experiment scale (n=2000, p=128, L=1000, λ=0.2, k=128,
//! 15 learning passes over 400 000 patches, μ=3, K=10 splits at 70% train).
//!
//! ```text
//! [dataset]                      [learner]
//! n = 2000                       k = 128
//! pulse_count = 4                iterations = 15
//! sample_rate_hz = 96000         batch_size = 256
//! range_min_m = 100              sample_patches = 400000
//! range_max_m = 3000
//! azimuth_min_rad = -3.14159     [pyramid]
//! azimuth_max_rad = 3.14159      layer = 1,1,1
//! noise_std = 0.0001
//! count = 500                    [pool]
//!                                mu = 3
//! [patch]
//! p = 128                        [regress]
//! patches_per_click = 1000       loss = squared
//! pca_dims = 0                   c = 1
//! mean_center = false            c_grid = 0.01,0.1,1,10,100
//!                                max_iter = 1000
//! [encoder]                      tol = 1e-8
//! method = lasso_lars            normalize_targets = true
//! lambda = 0.2
//! beta = 1.0                     [eval]
//! omp_sparsity = 8               folds = 10
//! lars_max_steps = 400           train_fraction = 0.7
//! tol = 1e-10
//!                                [io]
//!                                seed = 42
//!                                threads = 0
//!                                out_dir = out
//! ```
//!
//! `[pyramid] layer` may repeat, one `a,b,omega` row per pyramid layer.
//!
//! All randomness derives from the single `[io] seed`: the generator uses
//! stream `(seed, "gen")`, the experiment harness `(seed, ...)` per stage and
//! round (see [`crate::seed::derive_seed`]).

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use crate::coding::{EncodeMethod, EncoderConfig};
use crate::dataset::SyntheticConfig;
use crate::error::{Error, Result};
use crate::eval::ExperimentConfig;
use crate::patching::PatchConfig;
use crate::pooling::{PyramidLayer, PyramidSpec};
use crate::regress::{Loss, TrainConfig};
use crate::seed::derive_seed;

/// Full pipeline configuration: synthetic generation, the experiment stack,
/// the split protocol, and I/O settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub synth: SyntheticConfig,
    /// Clicks generated by `gen`/`pipeline` when no count is given.
    pub synth_count: usize,
    pub experiment: ExperimentConfig,
    /// Cross-validation rounds K.
    pub folds: usize,
    pub train_fraction: f64,
    /// Root seed; all stage seeds derive from it.
    pub seed: u64,
    /// Worker threads (0 = automatic).
    pub threads: usize,
    /// Output directory of the `pipeline` subcommand.
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut cfg = PipelineConfig {
            synth: SyntheticConfig::default(),
            synth_count: 500,
            experiment: ExperimentConfig {
                patch: PatchConfig::new(128, 1000),
                encoder: EncoderConfig::default(),
                k: 128,
                dict_iterations: 15,
                dict_batch_size: 256,
                dict_sample_max: 400_000,
                pyramid: PyramidSpec::single(),
                mu: 3.0,
                train: TrainConfig::default(),
                c_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
                seed: 0,
            },
            folds: 10,
            train_fraction: 0.7,
            seed: 42,
            threads: 0,
            out_dir: PathBuf::from("out"),
        };
        cfg.set_seed(42);
        cfg
    }
}

impl PipelineConfig {
    /// Install a new root seed and re-derive the stage seeds.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.synth.rng_seed = derive_seed(seed, "gen", 0);
        self.experiment.seed = derive_seed(seed, "experiment", 0);
    }

    /// Cross-field validation; error messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.experiment.validate(self.synth.n)?;
        if self.folds == 0 {
            return Err(Error::Config("eval.folds must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "eval.train_fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.set_seed(cfg.seed);
        Ok(cfg)
    }

    /// Parse the key-value text; defaults fill anything unset.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut section = String::new();
        let mut pyramid_layers: Vec<PyramidLayer> = Vec::new();
        let mut range_bounds = cfg.synth.range_bounds_m;
        let mut azimuth_bounds = cfg.synth.azimuth_bounds_rad;

        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::Config(format!("line {}: malformed section {:?}", lineno + 1, line))
                    })?
                    .trim();
                match name {
                    "dataset" | "patch" | "encoder" | "learner" | "pyramid" | "pool"
                    | "regress" | "eval" | "io" => section = name.to_string(),
                    other => {
                        return Err(Error::Config(format!(
                            "line {}: unknown section [{}]",
                            lineno + 1,
                            other
                        )))
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, found {:?}",
                    lineno + 1,
                    line
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            let field = format!("{}.{}", section, key);
            let bad =
                |what: &str| Error::Config(format!("{}: invalid {} {:?}", field, what, value));

            let parse_usize = || value.parse::<usize>().map_err(|_| bad("integer"));
            let parse_u64 = || value.parse::<u64>().map_err(|_| bad("integer"));
            let parse_f64 = || value.parse::<f64>().map_err(|_| bad("number"));
            let parse_bool = || match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(bad("boolean (true/false)")),
            };

            match (section.as_str(), key) {
                ("dataset", "n") => cfg.synth.n = parse_usize()?,
                ("dataset", "pulse_count") => cfg.synth.pulse_count_base = parse_usize()?,
                ("dataset", "sample_rate_hz") => cfg.synth.sample_rate_hz = parse_f64()?,
                ("dataset", "range_min_m") => range_bounds.0 = parse_f64()?,
                ("dataset", "range_max_m") => range_bounds.1 = parse_f64()?,
                ("dataset", "azimuth_min_rad") => azimuth_bounds.0 = parse_f64()?,
                ("dataset", "azimuth_max_rad") => azimuth_bounds.1 = parse_f64()?,
                ("dataset", "noise_std") => cfg.synth.noise_std = parse_f64()?,
                ("dataset", "count") => cfg.synth_count = parse_usize()?,
                ("patch", "p") => cfg.experiment.patch.p = parse_usize()?,
                ("patch", "patches_per_click") => {
                    cfg.experiment.patch.patches_per_click = parse_usize()?
                }
                ("patch", "pca_dims") => {
                    let v = parse_usize()?;
                    cfg.experiment.patch.pca_dims = if v == 0 { None } else { Some(v) };
                }
                ("patch", "mean_center") => cfg.experiment.patch.mean_center = parse_bool()?,
                ("encoder", "method") => {
                    cfg.experiment.encoder.method = match value {
                        "ols" => EncodeMethod::Ols,
                        "ridge" => EncodeMethod::Ridge,
                        "lasso_lars" => EncodeMethod::LassoLars,
                        "omp" => EncodeMethod::Omp,
                        _ => return Err(bad("method (ols|ridge|lasso_lars|omp)")),
                    }
                }
                ("encoder", "lambda") => cfg.experiment.encoder.lambda = parse_f64()?,
                ("encoder", "beta") => cfg.experiment.encoder.beta = parse_f64()?,
                ("encoder", "omp_sparsity") => cfg.experiment.encoder.omp_sparsity = parse_usize()?,
                ("encoder", "lars_max_steps") => {
                    cfg.experiment.encoder.lars_max_steps = parse_usize()?
                }
                ("encoder", "tol") => cfg.experiment.encoder.tol = parse_f64()?,
                ("learner", "k") => cfg.experiment.k = parse_usize()?,
                ("learner", "iterations") => cfg.experiment.dict_iterations = parse_usize()?,
                ("learner", "batch_size") => cfg.experiment.dict_batch_size = parse_usize()?,
                ("learner", "sample_patches") => cfg.experiment.dict_sample_max = parse_usize()?,
                ("pyramid", "layer") => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(Error::Config(format!(
                            "{}: expected `a,b,omega`, found {:?}",
                            field, value
                        )));
                    }
                    let nums: Vec<f64> = parts
                        .iter()
                        .map(|p| p.parse::<f64>().map_err(|_| bad("layer row `a,b,omega`")))
                        .collect::<Result<_>>()?;
                    pyramid_layers.push(PyramidLayer::new(nums[0], nums[1], nums[2]));
                }
                ("pool", "mu") => cfg.experiment.mu = parse_f64()?,
                ("regress", "loss") => {
                    cfg.experiment.train.loss = match value {
                        "squared" => Loss::Squared,
                        "logistic" => Loss::Logistic,
                        _ => return Err(bad("loss (squared|logistic)")),
                    }
                }
                ("regress", "c") => cfg.experiment.train.c = parse_f64()?,
                ("regress", "c_grid") => {
                    cfg.experiment.c_grid = value
                        .split(',')
                        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("number list")))
                        .collect::<Result<_>>()?;
                }
                ("regress", "max_iter") => cfg.experiment.train.max_iter = parse_usize()?,
                ("regress", "tol") => cfg.experiment.train.tol = parse_f64()?,
                ("regress", "normalize_targets") => {
                    cfg.experiment.train.normalize_targets = parse_bool()?
                }
                ("eval", "folds") => cfg.folds = parse_usize()?,
                ("eval", "train_fraction") => cfg.train_fraction = parse_f64()?,
                ("io", "seed") => cfg.seed = parse_u64()?,
                ("io", "threads") => cfg.threads = parse_usize()?,
                ("io", "out_dir") => cfg.out_dir = PathBuf::from(value),
                ("", _) => {
                    return Err(Error::Config(format!(
                        "key {:?} appears before any [section]",
                        key
                    )))
                }
                _ => {
                    return Err(Error::Config(format!("unknown key {}", field)));
                }
            }
        }

        cfg.synth.range_bounds_m = range_bounds;
        cfg.synth.azimuth_bounds_rad = azimuth_bounds;
        if !pyramid_layers.is_empty() {
            cfg.experiment.pyramid = PyramidSpec::new(pyramid_layers)?;
        }
        cfg.set_seed(cfg.seed);
        Ok(cfg)
    }
}

/// Default azimuth bounds re-exported for config docs.
pub const FULL_CIRCLE: (f64, f64) = (-PI, PI);
