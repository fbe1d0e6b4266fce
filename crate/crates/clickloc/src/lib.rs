//! clickloc — sparse-coded global features for bioacoustic clicks, with
//! regression-based range/azimuth estimation.
//!
//! The pipeline turns a fixed-length click waveform into a global descriptor
//! and regresses where the emitting animal is:
//!
//! 1. **patching** — slice each click into `L` equally spaced, ℓ2-normalized
//!    local patches of `p` samples, optionally PCA-projected to `p'` dims;
//! 2. **coding** — encode every patch against a learned dictionary of
//!    unit-norm atoms (lasso via LARS by default; OLS, ridge, and OMP are
//!    also available), with online mini-batch dictionary learning;
//! 3. **pooling** — aggregate the per-patch codes over a temporal pyramid of
//!    regions with ℓμ-norm pooling into one feature of dimension D·k;
//! 4. **regress** — fit L2-regularized linear models (squared or logistic
//!    loss) per target and predict range (m) and azimuth (rad);
//! 5. **eval** — K repeated stratified train/test splits, ARMSE per
//!    hydrophone and global, μ/k sweeps with paired splits;
//! 6. **dataset** — CSV/binary/WAV ingestion, a feature cache, and a
//!    synthetic multi-pulse click generator for desk-scale experiments.
//!
//! # Examples
//!
//! Each capability has a runnable example:
//!
//! ```text
//! cargo run --release -p clickloc --example generate_clicks
//! cargo run --release -p clickloc --example extract_patches
//! cargo run --release -p clickloc --example encode_patch
//! cargo run --release -p clickloc --example learn_dictionary
//! cargo run --release -p clickloc --example pool_pyramid
//! cargo run --release -p clickloc --example train_regressor
//! cargo run --release -p clickloc --example crossval_synthetic
//! cargo run --release -p clickloc --example sweep_mu
//! ```
//!
//! A thin `clickloc` binary wraps the staged pipeline (`gen`, `train-dict`,
//! `encode`, `train-eval`, `sweep`, `pipeline`); see the README and the
//! [`config`] module for the configuration format.

pub mod coding;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod patching;
pub mod pipeline;
pub mod pooling;
pub mod regress;
pub mod seed;

pub use error::{Error, Result};
