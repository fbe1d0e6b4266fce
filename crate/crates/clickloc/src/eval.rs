//! Cross-validated evaluation: split protocol, ARMSE metrics, and sweeps.
//!
//! The protocol is K repeated random splits (not disjoint folds): each round
//! draws a fresh train/test partition holding `train_fraction` of the clicks,
//! stratified by hydrophone. Within every round the PCA, the dictionary, and
//! the regressors are fitted on training clicks only; test clicks are only
//! ever encoded and scored.
//!
//! Two error conventions are reported side by side:
//!
//! - `literal`: per round and hydrophone, `√(Σ e²)` over the test errors —
//!   the un-normalized form;
//! - `normalized`: `√(mean e²)`, the usual RMSE.
//!
//! Per-hydrophone values are averaged over the K rounds, and the global
//! figure is the mean of the per-hydrophone averages.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::coding::{encode_batch, learn_dictionary, Dictionary, EncoderConfig, LearnerConfig};
use crate::dataset::ClickDataset;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::patching::{extract_patches, fit_pca, patch_offsets, project, PatchConfig, PcaModel};
use crate::pooling::{pool_click_id, GlobalFeature, PyramidSpec};
use crate::regress::{predict, train, LinearModel, Target, TrainConfig};
use crate::seed::{derive_seed, stream_rng};

// ---------------------------------------------------------------------------
// Split protocol
// ---------------------------------------------------------------------------

/// One train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRound {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// K stratified random splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub k: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub rounds: Vec<SplitRound>,
}

/// Draw `k` independent train/test splits over `hydrophone_ids.len()` clicks.
///
/// Each round shuffles every hydrophone's clicks and apportions the global
/// train budget `round(train_fraction·N)` across hydrophones by largest
/// remainder, so strata are represented proportionally and the total is
/// exact. Deterministic per seed.
pub fn make_splits(
    hydrophone_ids: &[u32],
    k: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitPlan> {
    let n = hydrophone_ids.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "need at least 2 clicks to split, got {}",
            n
        )));
    }
    if k == 0 {
        return Err(Error::Config("fold count K must be >= 1".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction {} must lie in (0, 1)",
            train_fraction
        )));
    }
    let budget = (train_fraction * n as f64).round() as usize;
    if budget == 0 || budget == n {
        return Err(Error::Config(format!(
            "train_fraction {} yields an empty train or test set for N={}",
            train_fraction, n
        )));
    }

    let mut strata: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &h) in hydrophone_ids.iter().enumerate() {
        strata.entry(h).or_default().push(i);
    }

    // Largest-remainder apportionment of the train budget across strata.
    let mut quota: Vec<(u32, usize, f64)> = strata
        .iter()
        .map(|(&h, idx)| {
            let exact = train_fraction * idx.len() as f64;
            (h, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut assigned: usize = quota.iter().map(|&(_, t, _)| t).sum();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| {
        quota[b]
            .2
            .partial_cmp(&quota[a].2)
            .unwrap()
            .then(quota[a].0.cmp(&quota[b].0))
    });
    let mut cursor = 0;
    while assigned < budget {
        let qi = order[cursor % order.len()];
        let cap = strata[&quota[qi].0].len();
        if quota[qi].1 < cap {
            quota[qi].1 += 1;
            assigned += 1;
        }
        cursor += 1;
    }
    let train_counts: BTreeMap<u32, usize> = quota.iter().map(|&(h, t, _)| (h, t)).collect();

    let mut rounds = Vec::with_capacity(k);
    for round in 0..k {
        let mut rng = stream_rng(seed, "split", round as u64);
        let mut train = Vec::with_capacity(budget);
        let mut test = Vec::with_capacity(n - budget);
        for (h, idx) in &strata {
            let mut shuffled = idx.clone();
            shuffled.shuffle(&mut rng);
            let t = train_counts[h];
            train.extend_from_slice(&shuffled[..t]);
            test.extend_from_slice(&shuffled[t..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        rounds.push(SplitRound { train, test });
    }
    Ok(SplitPlan {
        k,
        train_fraction,
        seed,
        rounds,
    })
}

// ---------------------------------------------------------------------------
// ARMSE
// ---------------------------------------------------------------------------

/// Error convention selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmseMode {
    /// `√(Σ e²)`, without dividing by the test count.
    Literal,
    /// `√(mean e²)`, the conventional RMSE.
    Normalized,
}

impl ArmseMode {
    pub fn name(&self) -> &'static str {
        match self {
            ArmseMode::Literal => "literal",
            ArmseMode::Normalized => "normalized",
        }
    }
}

/// Root-square error of a batch of estimates against ground truth.
pub fn armse(truth: &[f64], estimates: &[f64], mode: ArmseMode) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Config("armse needs at least one sample".into()));
    }
    if truth.len() != estimates.len() {
        return Err(Error::Shape(format!(
            "{} truth values but {} estimates",
            truth.len(),
            estimates.len()
        )));
    }
    let ss: f64 = truth
        .iter()
        .zip(estimates)
        .map(|(t, e)| (t - e) * (t - e))
        .sum();
    Ok(match mode {
        ArmseMode::Literal => ss.sqrt(),
        ArmseMode::Normalized => (ss / truth.len() as f64).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Experiment configuration and report
// ---------------------------------------------------------------------------

/// Everything one cross-validated experiment needs besides the dataset and
/// the split plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub patch: PatchConfig,
    pub encoder: EncoderConfig,
    /// Dictionary atom count k.
    pub k: usize,
    /// Dictionary learning passes.
    pub dict_iterations: usize,
    pub dict_batch_size: usize,
    /// Cap M on the training patches sampled for dictionary learning.
    pub dict_sample_max: usize,
    pub pyramid: PyramidSpec,
    /// Pooling exponent μ ≠ 0.
    pub mu: f64,
    pub train: TrainConfig,
    /// Candidate C values; more than one triggers nested model selection.
    pub c_grid: Vec<f64>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        self.patch.validate(n)?;
        self.encoder.validate()?;
        if !(self.encoder.lambda > 0.0) {
            return Err(Error::Config(
                "encoder.lambda must be > 0 (dictionary learning always uses the lasso)".into(),
            ));
        }
        if self.k == 0 {
            return Err(Error::Config("learner.k must be >= 1".into()));
        }
        if self.dict_iterations == 0 {
            return Err(Error::Config("learner.iterations must be >= 1".into()));
        }
        if self.dict_batch_size == 0 {
            return Err(Error::Config("learner.batch_size must be >= 1".into()));
        }
        if self.dict_sample_max == 0 {
            return Err(Error::Config("learner.sample_patches must be >= 1".into()));
        }
        if self.mu == 0.0 || !self.mu.is_finite() {
            return Err(Error::Config(format!(
                "pool.mu must be finite and nonzero, got {}",
                self.mu
            )));
        }
        self.train.validate()?;
        for &c in &self.c_grid {
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "regress.c_grid entries must be > 0, got {}",
                    c
                )));
            }
        }
        Ok(())
    }

    /// Canonical one-line rendering of the configuration, stable across runs.
    pub fn snapshot(&self) -> String {
        let pyr: Vec<String> = self
            .pyramid
            .layers()
            .iter()
            .map(|l| format!("{}:{}:{}", l.subdivision, l.overlap, l.weight))
            .collect();
        let grid: Vec<String> = self.c_grid.iter().map(|c| c.to_string()).collect();
        format!(
            "p={} L={} pca={} center={} method={:?} lambda={} beta={} omp={} steps={} k={} iters={} batch={} M={} pyramid=[{}] mu={} loss={:?} C={} grid=[{}] norm={} seed={}",
            self.patch.p,
            self.patch.patches_per_click,
            self.patch.pca_dims.map_or(0, |v| v),
            self.patch.mean_center,
            self.encoder.method,
            self.encoder.lambda,
            self.encoder.beta,
            self.encoder.omp_sparsity,
            self.encoder.lars_max_steps,
            self.k,
            self.dict_iterations,
            self.dict_batch_size,
            self.dict_sample_max,
            pyr.join(";"),
            self.mu,
            self.train.loss,
            self.train.c,
            grid.join(","),
            self.train.normalize_targets,
            self.seed,
        )
    }
}

/// ARMSE values in one error convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmseAggregate {
    /// Mean over rounds, per hydrophone.
    pub per_hydrophone: BTreeMap<u32, f64>,
    /// Mean of the per-hydrophone values.
    pub global: f64,
    /// Raw per-round values (hydrophones absent from a round are omitted).
    pub per_round: Vec<BTreeMap<u32, f64>>,
}

impl ArmseAggregate {
    fn from_rounds(rounds: Vec<BTreeMap<u32, f64>>) -> Self {
        let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
        for r in &rounds {
            for (&h, &v) in r {
                let e = sums.entry(h).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        let per_hydrophone: BTreeMap<u32, f64> = sums
            .into_iter()
            .map(|(h, (s, c))| (h, s / c as f64))
            .collect();
        let global = if per_hydrophone.is_empty() {
            0.0
        } else {
            per_hydrophone.values().sum::<f64>() / per_hydrophone.len() as f64
        };
        ArmseAggregate {
            per_hydrophone,
            global,
            per_round: rounds,
        }
    }
}

/// Cross-validated result for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub target: Target,
    pub normalized: ArmseAggregate,
    pub literal: ArmseAggregate,
    /// Same metrics for the train-mean constant predictor.
    pub baseline_normalized: ArmseAggregate,
    pub baseline_literal: ArmseAggregate,
    pub config_snapshot: String,
}

/// Both targets of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub range: EvalReport,
    pub azimuth: EvalReport,
    pub folds: usize,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Round fitting
// ---------------------------------------------------------------------------

/// Everything fitted from one round's training clicks.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundFit {
    pub pca: Option<PcaModel>,
    pub dictionary: Dictionary,
    pub range_model: LinearModel,
    pub azimuth_model: LinearModel,
    /// Pooled features of the training clicks, in `train` index order.
    train_features: Vec<GlobalFeature>,
}

/// Fit PCA, dictionary, and both regressors on the given training clicks.
/// Test clicks are never touched here, which is what keeps the evaluation
/// leakage-free.
/// Draw up to `max` patch columns uniformly without replacement from the
/// patches of the listed clicks, using the `(root_seed, tag, index)` stream.
pub fn draw_patch_sample(
    dataset: &ClickDataset,
    patch: &PatchConfig,
    indices: &[usize],
    max: usize,
    root_seed: u64,
    tag: &str,
    index: u64,
) -> Result<Mat> {
    let l = patch.patches_per_click;
    let total = indices.len() * l;
    let m = max.min(total);
    let mut rng = stream_rng(root_seed, tag, index);
    let drawn = rand::seq::index::sample(&mut rng, total, m);
    let mut by_click: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (dest, g) in drawn.iter().enumerate() {
        by_click.entry(g / l).or_default().push((g % l, dest));
    }
    let mut sample = Mat::zeros(patch.p, m);
    for (click_pos, cols) in &by_click {
        let patches = extract_patches(&dataset.clicks()[indices[*click_pos]], patch)?;
        for &(col, dest) in cols {
            sample
                .col_mut(dest)
                .copy_from_slice(patches.columns().col(col));
        }
    }
    Ok(sample)
}

pub fn fit_round(
    dataset: &ClickDataset,
    cfg: &ExperimentConfig,
    train_idx: &[usize],
    round: u64,
) -> Result<RoundFit> {
    if train_idx.is_empty() {
        return Err(Error::Config("round has no training clicks".into()));
    }
    let sample = draw_patch_sample(
        dataset,
        &cfg.patch,
        train_idx,
        cfg.dict_sample_max,
        cfg.seed,
        "dict-sample",
        round,
    )?;
    let m = sample.cols();

    let pca = match cfg.patch.pca_dims {
        Some(pp) => Some(fit_pca(&sample, pp)?),
        None => None,
    };
    let dict_input = match &pca {
        Some(model) => {
            let mut projected = Mat::zeros(model.output_dim(), m);
            for j in 0..m {
                let v = model.project_vec(sample.col(j))?;
                projected.col_mut(j).copy_from_slice(&v);
            }
            projected
        }
        None => sample,
    };

    let learner = LearnerConfig {
        k: cfg.k,
        lambda: cfg.encoder.lambda,
        iterations: cfg.dict_iterations,
        batch_size: cfg.dict_batch_size,
        seed: derive_seed(cfg.seed, "dict", round),
        lars_max_steps: cfg.encoder.lars_max_steps,
    };
    let dictionary = learn_dictionary(&dict_input, &learner)?;

    // Pooled features of the training clicks.
    let train_features = encode_features(dataset, cfg, &pca, &dictionary, train_idx)?;
    let feat_mat = Mat::from_columns(
        &train_features
            .iter()
            .map(|f| f.values.clone())
            .collect::<Vec<_>>(),
    )?;
    let range_targets: Vec<f64> = train_idx
        .iter()
        .map(|&i| dataset.clicks()[i].range_m)
        .collect();
    let azimuth_targets: Vec<f64> = train_idx
        .iter()
        .map(|&i| dataset.clicks()[i].azimuth_rad)
        .collect();

    let (range_model, azimuth_model) = {
        let (r, a) = rayon::join(
            || train_with_selection(&feat_mat, &range_targets, Target::Range, cfg, round),
            || train_with_selection(&feat_mat, &azimuth_targets, Target::Azimuth, cfg, round),
        );
        (r?, a?)
    };

    Ok(RoundFit {
        pca,
        dictionary,
        range_model,
        azimuth_model,
        train_features,
    })
}

/// Pooled feature of every listed click, computed in parallel.
pub fn encode_features(
    dataset: &ClickDataset,
    cfg: &ExperimentConfig,
    pca: &Option<PcaModel>,
    dictionary: &Dictionary,
    indices: &[usize],
) -> Result<Vec<GlobalFeature>> {
    let n = dataset.n();
    let offsets = patch_offsets(n, cfg.patch.p, cfg.patch.patches_per_click);
    indices
        .par_iter()
        .map(|&i| {
            let click = &dataset.clicks()[i];
            let mut patches = extract_patches(click, &cfg.patch)?;
            if let Some(model) = pca {
                patches = project(&patches, model)?;
            }
            let codes = encode_batch(&patches, dictionary, &cfg.encoder)?;
            pool_click_id(&codes, &offsets, n, &cfg.pyramid, cfg.mu, click.click_id)
        })
        .collect()
}

/// Train one target's model, selecting C on a nested split when the grid has
/// more than one candidate.
pub(crate) fn train_with_selection(
    features: &Mat,
    targets: &[f64],
    target: Target,
    cfg: &ExperimentConfig,
    round: u64,
) -> Result<LinearModel> {
    let n = features.cols();
    let mut chosen = cfg.train.c;
    if cfg.c_grid.len() == 1 {
        chosen = cfg.c_grid[0];
    } else if cfg.c_grid.len() > 1 && n >= 4 {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = stream_rng(cfg.seed, "c-select", round ^ (target as u64) << 32);
        order.shuffle(&mut rng);
        let cut = ((n as f64) * 0.7).round() as usize;
        let cut = cut.clamp(2, n - 1);
        let (inner_train, inner_val) = order.split_at(cut);
        let xt = features.select_columns(inner_train);
        let yt: Vec<f64> = inner_train.iter().map(|&i| targets[i]).collect();
        let xv = features.select_columns(inner_val);
        let yv: Vec<f64> = inner_val.iter().map(|&i| targets[i]).collect();

        let mut best = f64::INFINITY;
        for &c in &cfg.c_grid {
            let model = train(
                &xt,
                &yt,
                target,
                &TrainConfig {
                    c,
                    ..cfg.train.clone()
                },
            )?;
            let preds: Vec<f64> = (0..xv.cols())
                .map(|j| predict(&model, xv.col(j)))
                .collect::<Result<_>>()?;
            let err = armse(&yv, &preds, ArmseMode::Normalized)?;
            if err < best {
                best = err;
                chosen = c;
            }
        }
    }
    train(
        features,
        targets,
        target,
        &TrainConfig {
            c: chosen,
            ..cfg.train.clone()
        },
    )
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

struct RoundScores {
    /// (literal, normalized) per hydrophone, model predictions.
    model: BTreeMap<u32, (f64, f64)>,
    /// Same for the train-mean baseline.
    baseline: BTreeMap<u32, (f64, f64)>,
}

fn score_round(
    dataset: &ClickDataset,
    cfg: &ExperimentConfig,
    fit: &RoundFit,
    split: &SplitRound,
    target: Target,
) -> Result<RoundScores> {
    let test_features = encode_features(dataset, cfg, &fit.pca, &fit.dictionary, &split.test)?;
    let model = match target {
        Target::Range => &fit.range_model,
        Target::Azimuth => &fit.azimuth_model,
    };
    let truth_of = |i: usize| match target {
        Target::Range => dataset.clicks()[i].range_m,
        Target::Azimuth => dataset.clicks()[i].azimuth_rad,
    };
    let train_mean =
        split.train.iter().map(|&i| truth_of(i)).sum::<f64>() / split.train.len() as f64;

    let mut by_hydro: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (pos, &i) in split.test.iter().enumerate() {
        let est = predict(model, &test_features[pos].values)?;
        let entry = by_hydro
            .entry(dataset.clicks()[i].hydrophone_id)
            .or_default();
        entry.0.push(truth_of(i));
        entry.1.push(est);
    }

    let mut scores = RoundScores {
        model: BTreeMap::new(),
        baseline: BTreeMap::new(),
    };
    for (h, (truth, est)) in &by_hydro {
        let lit = armse(truth, est, ArmseMode::Literal)?;
        let nor = armse(truth, est, ArmseMode::Normalized)?;
        scores.model.insert(*h, (lit, nor));
        let base: Vec<f64> = vec![train_mean; truth.len()];
        let blit = armse(truth, &base, ArmseMode::Literal)?;
        let bnor = armse(truth, &base, ArmseMode::Normalized)?;
        scores.baseline.insert(*h, (blit, bnor));
    }
    Ok(scores)
}

/// Run the full cross-validated experiment: per round, fit on the training
/// clicks, score both targets on the test clicks, then aggregate.
pub fn run_experiment(
    dataset: &ClickDataset,
    cfg: &ExperimentConfig,
    splits: &SplitPlan,
) -> Result<ExperimentReport> {
    cfg.validate(dataset.n())?;
    if dataset.is_empty() {
        return Err(Error::Config("experiment needs a nonempty dataset".into()));
    }

    let per_round: Vec<(RoundScores, RoundScores)> = splits
        .rounds
        .par_iter()
        .enumerate()
        .map(|(r, split)| {
            let fit = fit_round(dataset, cfg, &split.train, r as u64)?;
            let range = score_round(dataset, cfg, &fit, split, Target::Range)?;
            let azimuth = score_round(dataset, cfg, &fit, split, Target::Azimuth)?;
            Ok((range, azimuth))
        })
        .collect::<Result<_>>()?;

    let snapshot = cfg.snapshot();
    let build = |pick: &dyn Fn(&(RoundScores, RoundScores)) -> &RoundScores, target: Target| {
        let lit: Vec<BTreeMap<u32, f64>> = per_round
            .iter()
            .map(|r| pick(r).model.iter().map(|(&h, &(l, _))| (h, l)).collect())
            .collect();
        let nor: Vec<BTreeMap<u32, f64>> = per_round
            .iter()
            .map(|r| pick(r).model.iter().map(|(&h, &(_, n))| (h, n)).collect())
            .collect();
        let blit: Vec<BTreeMap<u32, f64>> = per_round
            .iter()
            .map(|r| {
                pick(r)
                    .baseline
                    .iter()
                    .map(|(&h, &(l, _))| (h, l))
                    .collect()
            })
            .collect();
        let bnor: Vec<BTreeMap<u32, f64>> = per_round
            .iter()
            .map(|r| {
                pick(r)
                    .baseline
                    .iter()
                    .map(|(&h, &(_, n))| (h, n))
                    .collect()
            })
            .collect();
        EvalReport {
            target,
            normalized: ArmseAggregate::from_rounds(nor),
            literal: ArmseAggregate::from_rounds(lit),
            baseline_normalized: ArmseAggregate::from_rounds(bnor),
            baseline_literal: ArmseAggregate::from_rounds(blit),
            config_snapshot: snapshot.clone(),
        }
    };

    Ok(ExperimentReport {
        range: build(&|r| &r.0, Target::Range),
        azimuth: build(&|r| &r.1, Target::Azimuth),
        folds: splits.k,
        seed: splits.seed,
    })
}

/// Cross-validate regressors on precomputed features (d × N, one column per
/// click). This is the `train-eval` path: the encoding stage is shared
/// across rounds, only the regressors are refit per round.
pub fn evaluate_features(
    features: &Mat,
    labels: &[(f64, f64)],
    hydrophone_ids: &[u32],
    cfg: &ExperimentConfig,
    splits: &SplitPlan,
) -> Result<ExperimentReport> {
    cfg.train.validate()?;
    let n = features.cols();
    if labels.len() != n || hydrophone_ids.len() != n {
        return Err(Error::Shape(format!(
            "{} features, {} labels, {} hydrophone ids",
            n,
            labels.len(),
            hydrophone_ids.len()
        )));
    }

    let score_target = |split: &SplitRound, round: u64, target: Target| -> Result<RoundScores> {
        let truth_of = |i: usize| match target {
            Target::Range => labels[i].0,
            Target::Azimuth => labels[i].1,
        };
        let xt = features.select_columns(&split.train);
        let yt: Vec<f64> = split.train.iter().map(|&i| truth_of(i)).collect();
        let model = train_with_selection(&xt, &yt, target, cfg, round)?;
        let train_mean = yt.iter().sum::<f64>() / yt.len() as f64;

        let mut by_hydro: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for &i in &split.test {
            let est = predict(&model, features.col(i))?;
            let entry = by_hydro.entry(hydrophone_ids[i]).or_default();
            entry.0.push(truth_of(i));
            entry.1.push(est);
        }
        let mut scores = RoundScores {
            model: BTreeMap::new(),
            baseline: BTreeMap::new(),
        };
        for (h, (truth, est)) in &by_hydro {
            let lit = armse(truth, est, ArmseMode::Literal)?;
            let nor = armse(truth, est, ArmseMode::Normalized)?;
            scores.model.insert(*h, (lit, nor));
            let base: Vec<f64> = vec![train_mean; truth.len()];
            scores.baseline.insert(
                *h,
                (
                    armse(truth, &base, ArmseMode::Literal)?,
                    armse(truth, &base, ArmseMode::Normalized)?,
                ),
            );
        }
        Ok(scores)
    };

    let per_round: Vec<(RoundScores, RoundScores)> = splits
        .rounds
        .iter()
        .enumerate()
        .map(|(r, split)| {
            Ok((
                score_target(split, r as u64, Target::Range)?,
                score_target(split, r as u64, Target::Azimuth)?,
            ))
        })
        .collect::<Result<_>>()?;

    let snapshot = cfg.snapshot();
    let build = |pick: &dyn Fn(&(RoundScores, RoundScores)) -> &RoundScores, target: Target| {
        let grab = |f: &dyn Fn(&RoundScores) -> BTreeMap<u32, f64>| -> Vec<BTreeMap<u32, f64>> {
            per_round.iter().map(|r| f(pick(r))).collect()
        };
        EvalReport {
            target,
            normalized: ArmseAggregate::from_rounds(grab(&|s| {
                s.model.iter().map(|(&h, &(_, n))| (h, n)).collect()
            })),
            literal: ArmseAggregate::from_rounds(grab(&|s| {
                s.model.iter().map(|(&h, &(l, _))| (h, l)).collect()
            })),
            baseline_normalized: ArmseAggregate::from_rounds(grab(&|s| {
                s.baseline.iter().map(|(&h, &(_, n))| (h, n)).collect()
            })),
            baseline_literal: ArmseAggregate::from_rounds(grab(&|s| {
                s.baseline.iter().map(|(&h, &(l, _))| (h, l)).collect()
            })),
            config_snapshot: snapshot.clone(),
        }
    };

    Ok(ExperimentReport {
        range: build(&|r| &r.0, Target::Range),
        azimuth: build(&|r| &r.1, Target::Azimuth),
        folds: splits.k,
        seed: splits.seed,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Sweep axis with its values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Mu(Vec<f64>),
    K(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Mu(_) => "mu",
            SweepAxis::K(_) => "k",
        }
    }
}

/// Run one experiment per axis value, sharing the split plan across values
/// so the comparisons are paired.
pub fn sweep(
    dataset: &ClickDataset,
    base: &ExperimentConfig,
    axis: &SweepAxis,
    splits: &SplitPlan,
) -> Result<Vec<(f64, ExperimentReport)>> {
    let configs: Vec<(f64, ExperimentConfig)> = match axis {
        SweepAxis::Mu(values) => values
            .iter()
            .map(|&mu| (mu, ExperimentConfig { mu, ..base.clone() }))
            .collect(),
        SweepAxis::K(values) => values
            .iter()
            .map(|&k| (k as f64, ExperimentConfig { k, ..base.clone() }))
            .collect(),
    };
    configs
        .into_iter()
        .map(|(v, cfg)| Ok((v, run_experiment(dataset, &cfg, splits)?)))
        .collect()
}

/// CSV header for report/sweep files: one `armse_h<id>` column per
/// hydrophone id, in ascending order.
pub fn report_csv_header(hydrophone_ids: &[u32]) -> String {
    let mut s = String::from("axis_value,target,armse_mode,armse_global");
    for h in hydrophone_ids {
        s.push_str(&format!(",armse_h{}", h));
    }
    s.push_str(",fold,seed\n");
    s
}

fn push_rows(
    out: &mut String,
    axis_value: f64,
    target: &str,
    mode: &str,
    agg: &ArmseAggregate,
    hydrophone_ids: &[u32],
    seed: u64,
) {
    for (round, values) in agg.per_round.iter().enumerate() {
        let global = if values.is_empty() {
            0.0
        } else {
            values.values().sum::<f64>() / values.len() as f64
        };
        out.push_str(&format!("{},{},{},{}", axis_value, target, mode, global));
        for h in hydrophone_ids {
            match values.get(h) {
                Some(v) => out.push_str(&format!(",{}", v)),
                None => out.push(','),
            }
        }
        out.push_str(&format!(",{},{}\n", round, seed));
    }
    out.push_str(&format!(
        "{},{},{},{}",
        axis_value, target, mode, agg.global
    ));
    for h in hydrophone_ids {
        match agg.per_hydrophone.get(h) {
            Some(v) => out.push_str(&format!(",{}", v)),
            None => out.push(','),
        }
    }
    out.push_str(&format!(",mean,{}\n", seed));
}

/// Render one experiment's rows (no header).
pub fn report_csv_rows(
    axis_value: f64,
    report: &ExperimentReport,
    hydrophone_ids: &[u32],
) -> String {
    let mut out = String::new();
    for (target, eval) in [("range", &report.range), ("azimuth", &report.azimuth)] {
        push_rows(
            &mut out,
            axis_value,
            target,
            ArmseMode::Normalized.name(),
            &eval.normalized,
            hydrophone_ids,
            report.seed,
        );
        push_rows(
            &mut out,
            axis_value,
            target,
            ArmseMode::Literal.name(),
            &eval.literal,
            hydrophone_ids,
            report.seed,
        );
    }
    out
}

/// Render a complete sweep CSV (header plus one block of rows per value).
pub fn sweep_csv(results: &[(f64, ExperimentReport)], hydrophone_ids: &[u32]) -> String {
    let mut out = report_csv_header(hydrophone_ids);
    for (value, report) in results {
        out.push_str(&report_csv_rows(*value, report, hydrophone_ids));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn splits_have_exact_sizes_and_cover_everything() {
        let ids = vec![0u32; 10];
        let plan = make_splits(&ids, 3, 0.7, 5).unwrap();
        assert_eq!(plan.rounds.len(), 3);
        for round in &plan.rounds {
            assert_eq!(round.train.len(), 7);
            assert_eq!(round.test.len(), 3);
            let mut all: Vec<usize> = round.train.iter().chain(&round.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn splits_are_deterministic_per_seed() {
        let ids: Vec<u32> = (0..40).map(|i| i % 3).collect();
        let a = make_splits(&ids, 4, 0.7, 9).unwrap();
        let b = make_splits(&ids, 4, 0.7, 9).unwrap();
        assert_eq!(a, b);
        let c = make_splits(&ids, 4, 0.7, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn paper_scale_split_has_4294_training_clicks() {
        // N=6134 at 70% → round(4293.8) = 4294 per round.
        let counts = [1205usize, 1238, 1241, 1261, 1189];
        let ids: Vec<u32> = counts
            .iter()
            .enumerate()
            .flat_map(|(h, &c)| std::iter::repeat(h as u32 + 7).take(c))
            .collect();
        assert_eq!(ids.len(), 6134);
        let plan = make_splits(&ids, 10, 0.7, 1).unwrap();
        for round in &plan.rounds {
            assert_eq!(round.train.len(), 4294);
            assert_eq!(round.test.len(), 6134 - 4294);
        }
    }

    #[test]
    fn stratification_puts_every_hydrophone_in_every_test_set() {
        let ids: Vec<u32> = (0..60).map(|i| (i % 4) as u32).collect();
        let plan = make_splits(&ids, 5, 0.7, 2).unwrap();
        for round in &plan.rounds {
            for h in 0..4u32 {
                assert!(round.test.iter().any(|&i| ids[i] == h));
                assert!(round.train.iter().any(|&i| ids[i] == h));
            }
        }
    }

    #[test]
    fn degenerate_fractions_are_rejected() {
        let ids = vec![0u32; 10];
        assert!(make_splits(&ids, 3, 0.001, 0).is_err());
        assert!(make_splits(&ids, 3, 0.999, 0).is_err());
        assert!(make_splits(&ids, 0, 0.7, 0).is_err());
        assert!(make_splits(&[0u32], 1, 0.5, 0).is_err());
    }

    #[test]
    fn armse_hand_values() {
        assert_eq!(
            armse(&[1.0, 2.0], &[1.0, 2.0], ArmseMode::Literal).unwrap(),
            0.0
        );
        // Errors 3 and 4: literal 5, normalized 5/√2.
        let truth = [0.0, 0.0];
        let est = [3.0, 4.0];
        assert_abs_diff_eq!(
            armse(&truth, &est, ArmseMode::Literal).unwrap(),
            5.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            armse(&truth, &est, ArmseMode::Normalized).unwrap(),
            5.0 / 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn armse_is_symmetric_in_error_sign() {
        let truth = [1.0, 5.0, -2.0, 0.3];
        let err = [0.5, -1.0, 2.0, 0.0];
        let plus: Vec<f64> = truth.iter().zip(&err).map(|(t, e)| t + e).collect();
        let minus: Vec<f64> = truth.iter().zip(&err).map(|(t, e)| t - e).collect();
        for mode in [ArmseMode::Literal, ArmseMode::Normalized] {
            assert_abs_diff_eq!(
                armse(&truth, &plus, mode).unwrap(),
                armse(&truth, &minus, mode).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn armse_rejects_empty_and_mismatched_inputs() {
        assert!(armse(&[], &[], ArmseMode::Literal).is_err());
        assert!(armse(&[1.0], &[1.0, 2.0], ArmseMode::Literal).is_err());
    }

    #[test]
    fn aggregate_global_is_mean_of_per_hydrophone() {
        let rounds = vec![
            BTreeMap::from([(1u32, 2.0), (2u32, 4.0)]),
            BTreeMap::from([(1u32, 4.0), (2u32, 8.0)]),
        ];
        let agg = ArmseAggregate::from_rounds(rounds);
        assert_abs_diff_eq!(agg.per_hydrophone[&1], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(agg.per_hydrophone[&2], 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(agg.global, 4.5, epsilon = 1e-15);
        let mean_of_values =
            agg.per_hydrophone.values().sum::<f64>() / agg.per_hydrophone.len() as f64;
        assert_abs_diff_eq!(agg.global, mean_of_values, epsilon = 1e-15);
    }

    #[test]
    fn sweep_csv_shapes_are_stable() {
        // Empty sweep: header only.
        let csv = sweep_csv(&[], &[0, 1]);
        assert_eq!(csv.lines().count(), 1);
        assert_eq!(
            csv.trim(),
            "axis_value,target,armse_mode,armse_global,armse_h0,armse_h1,fold,seed"
        );
    }
}
