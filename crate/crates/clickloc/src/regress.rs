//! Per-target linear models on pooled features.
//!
//! Two loss functions share one L2-regularized objective shape:
//!
//! - `logistic`: `½‖w‖² + C·Σ log(1 + exp(-y_i·(wᵀx_i + b)))`, taken
//!   literally with continuous targets `y_i`;
//! - `squared`:  `½‖w‖² + C·Σ (y_i - wᵀx_i - b)²` (ridge regression), the
//!   default for the experiments.
//!
//! Both are minimized by an L-BFGS iteration with Armijo backtracking, so the
//! objective is non-increasing across iterations. The bias is an extension of
//! the plain linear form and is excluded from the regularizer. Targets are
//! affinely mapped to [-1, 1] when `normalize_targets` is on; the mapping is
//! stored in the model and inverted at prediction time.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Which ground-truth quantity a model estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Range,
    Azimuth,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::Range => "range",
            Target::Azimuth => "azimuth",
        }
    }
}

/// Training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Logistic,
    Squared,
}

/// Trainer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Data-term weight C > 0.
    pub c: f64,
    pub loss: Loss,
    pub max_iter: usize,
    /// Convergence: gradient 2-norm reduced to `tol` relative to the initial
    /// gradient (with an absolute floor of `tol`).
    pub tol: f64,
    /// Map targets affinely to [-1, 1] before training.
    pub normalize_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            loss: Loss::Squared,
            max_iter: 1000,
            tol: 1e-8,
            normalize_targets: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Config(format!(
                "regress.c must be > 0, got {}",
                self.c
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("regress.tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("regress.max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trained linear predictor for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub target: Target,
    /// The C the model was trained with.
    pub c: f64,
    /// Affine label mapping: raw = normalized·scale + offset.
    pub label_offset: f64,
    pub label_scale: f64,
    /// False when the solver stopped at `max_iter` before reaching `tol`.
    pub converged: bool,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Persist as `CCM1`: magic, u8 target tag, u32 d, f64 weights, f64 bias,
    /// f64 offset, f64 scale, little-endian.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(b"CCM1")?;
        w.write_all(&[match self.target {
            Target::Range => 0u8,
            Target::Azimuth => 1u8,
        }])?;
        w.write_all(&(self.weights.len() as u32).to_le_bytes())?;
        for v in &self.weights {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.bias.to_le_bytes())?;
        w.write_all(&self.label_offset.to_le_bytes())?;
        w.write_all(&self.label_scale.to_le_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("file too short for CCM1 header".into()))?;
        if &magic != b"CCM1" {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected CCM1",
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)
            .map_err(|_| Error::Format("unexpected end of file".into()))?;
        let target = match tag[0] {
            0 => Target::Range,
            1 => Target::Azimuth,
            t => return Err(Error::Format(format!("unknown target tag {}", t))),
        };
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)
            .map_err(|_| Error::Format("unexpected end of file".into()))?;
        let d = u32::from_le_bytes(b4) as usize;
        let read_f64 = |r: &mut BufReader<File>| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|_| Error::Format("unexpected end of file".into()))?;
            Ok(f64::from_le_bytes(b))
        };
        let mut weights = vec![0.0; d];
        for v in weights.iter_mut() {
            *v = read_f64(&mut r)?;
        }
        let bias = read_f64(&mut r)?;
        let label_offset = read_f64(&mut r)?;
        let label_scale = read_f64(&mut r)?;
        Ok(LinearModel {
            weights,
            bias,
            target,
            c: f64::NAN,
            label_offset,
            label_scale,
            converged: true,
        })
    }
}

/// Objective value and gradient of the regularized loss at `(w, bias)`.
/// `x` holds one sample per column (d × N).
pub fn objective_and_gradient(
    loss: Loss,
    c: f64,
    x: &Mat,
    y: &[f64],
    w: &[f64],
    bias: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.cols();
    debug_assert_eq!(y.len(), n);
    debug_assert_eq!(w.len(), x.rows());
    let mut obj = 0.5 * linalg::dot(w, w);
    let mut grad_w = w.to_vec();
    let mut grad_b = 0.0;
    for i in 0..n {
        let xi = x.col(i);
        let f = linalg::dot(w, xi) + bias;
        match loss {
            Loss::Logistic => {
                let t = y[i] * f;
                obj += c * softplus(-t);
                // d/df log(1+e^{-t}) = -y·sigmoid(-t)
                let g = -y[i] * sigmoid(-t) * c;
                linalg::axpy(g, xi, &mut grad_w);
                grad_b += g;
            }
            Loss::Squared => {
                let r = y[i] - f;
                obj += c * r * r;
                let g = -2.0 * c * r;
                linalg::axpy(g, xi, &mut grad_w);
                grad_b += g;
            }
        }
    }
    (obj, grad_w, grad_b)
}

/// Numerically stable log(1 + e^u).
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Train a model; `x` holds one sample per column (d × N).
pub fn train(x: &Mat, targets: &[f64], target: Target, cfg: &TrainConfig) -> Result<LinearModel> {
    Ok(train_traced(x, targets, target, cfg)?.0)
}

/// [`train`] that also returns the per-iteration objective values, which are
/// non-increasing by the line-search contract.
pub fn train_traced(
    x: &Mat,
    targets: &[f64],
    target: Target,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    cfg.validate()?;
    let n = x.cols();
    let d = x.rows();
    if targets.len() != n {
        return Err(Error::Shape(format!(
            "{} feature columns but {} targets",
            n,
            targets.len()
        )));
    }
    if n < 2 {
        return Err(Error::Config(format!(
            "training needs at least 2 samples, got {}",
            n
        )));
    }
    if targets.iter().any(|t| !t.is_finite()) || x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "training inputs contain non-finite values".into(),
        ));
    }

    let (offset, scale) = if cfg.normalize_targets {
        let lo = targets.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let offset = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        (offset, if half > 0.0 { half } else { 1.0 })
    } else {
        (0.0, 1.0)
    };
    let y: Vec<f64> = targets.iter().map(|t| (t - offset) / scale).collect();

    // θ = (w, bias); bias is the last coordinate and stays unregularized.
    let eval = |theta: &[f64]| -> (f64, Vec<f64>) {
        let (w, b) = theta.split_at(d);
        let (obj, gw, gb) = objective_and_gradient(cfg.loss, cfg.c, x, &y, w, b[0]);
        let mut g = gw;
        g.push(gb);
        (obj, g)
    };

    let (theta, converged, trace) = lbfgs(&eval, vec![0.0; d + 1], cfg.max_iter, cfg.tol);
    let (w, b) = theta.split_at(d);
    Ok((
        LinearModel {
            weights: w.to_vec(),
            bias: b[0],
            target,
            c: cfg.c,
            label_offset: offset,
            label_scale: scale,
            converged,
        },
        trace,
    ))
}

/// Predict the raw-scale target for one feature vector.
pub fn predict(model: &LinearModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.weights.len() {
        return Err(Error::Shape(format!(
            "feature has dimension {}, model expects {}",
            x.len(),
            model.weights.len()
        )));
    }
    let f = linalg::dot(&model.weights, x) + model.bias;
    Ok(f * model.label_scale + model.label_offset)
}

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;

/// Limited-memory BFGS with backtracking line search. Returns the final
/// iterate, a convergence flag, and the objective trace.
fn lbfgs(
    eval: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    theta0: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, bool, Vec<f64>) {
    let mut theta = theta0;
    let (mut f, mut g) = eval(&theta);
    let mut trace = vec![f];
    let g0_norm = linalg::norm2(&g);
    let target = tol * g0_norm.max(1.0);
    if g0_norm <= target {
        return (theta, true, trace);
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;

    for _ in 0..max_iter {
        // Two-loop recursion for the search direction.
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * linalg::dot(s, &dir);
            linalg::axpy(-a, yv, &mut dir);
            alphas.push(a);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = linalg::dot(s, yv) / linalg::dot(yv, yv);
            for v in dir.iter_mut() {
                *v *= gamma;
            }
        }
        for ((s, yv, rho), &a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * linalg::dot(yv, &dir);
            linalg::axpy(a - b, s, &mut dir);
        }

        let mut slope = linalg::dot(&g, &dir);
        if slope >= 0.0 {
            // Not a descent direction: fall back to steepest descent.
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -linalg::dot(&g, &g);
        }

        // Backtracking Armijo line search.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (fc, gc) = eval(&cand);
            if fc.is_finite() && fc <= f + ARMIJO_C1 * step * slope {
                let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = linalg::dot(&s, &yv);
                if sy > 1e-12 * linalg::norm2(&s) * linalg::norm2(&yv) {
                    if history.len() == LBFGS_MEMORY {
                        history.pop_front();
                    }
                    history.push_back((s, yv, 1.0 / sy));
                }
                theta = cand;
                f = fc;
                g = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        trace.push(f);
        if !accepted {
            break;
        }
        if linalg::norm2(&g) <= target {
            converged = true;
            break;
        }
    }
    (theta, converged, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn feature_matrix(cols: Vec<Vec<f64>>) -> Mat {
        Mat::from_columns(&cols).unwrap()
    }

    #[test]
    fn perfectly_linear_problem_is_recovered() {
        // One feature exactly proportional to the target.
        let targets: Vec<f64> = (0..20).map(|i| 10.0 + 3.0 * i as f64).collect();
        let x = feature_matrix(targets.iter().map(|&t| vec![0.5 * t]).collect());
        let cfg = TrainConfig {
            c: 1e6,
            loss: Loss::Squared,
            ..TrainConfig::default()
        };
        let model = train(&x, &targets, Target::Range, &cfg).unwrap();
        let span = 3.0 * 19.0;
        for (i, &t) in targets.iter().enumerate() {
            let pred = predict(&model, x.col(i)).unwrap();
            assert!(
                (pred - t).abs() < 1e-6 * span,
                "prediction {} for target {}",
                pred,
                t
            );
        }
    }

    #[test]
    fn constant_targets_land_in_the_bias() {
        let x = feature_matrix(vec![vec![1.0, -0.5], vec![0.3, 0.8], vec![-1.0, 0.1]]);
        let targets = vec![5.0, 5.0, 5.0];
        let cfg = TrainConfig {
            c: 10.0,
            loss: Loss::Squared,
            normalize_targets: false,
            ..TrainConfig::default()
        };
        let model = train(&x, &targets, Target::Range, &cfg).unwrap();
        assert!(linalg::norm2(&model.weights) < 1e-6);
        assert_abs_diff_eq!(model.bias, 5.0, epsilon = 1e-6);
    }

    #[test]
    fn zero_features_predict_the_target_mean() {
        let x = Mat::zeros(3, 4);
        let targets = vec![1.0, 2.0, 3.0, 6.0];
        let cfg = TrainConfig::default();
        let model = train(&x, &targets, Target::Range, &cfg).unwrap();
        let pred = predict(&model, &[0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(pred, 3.0, epsilon = 1e-6);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = crate::seed::stream_rng(12, "grad", 0);
        let d = 6;
        let n = 15;
        let x = feature_matrix(
            (0..n)
                .map(|_| (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
                .collect(),
        );
        let y: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        for loss in [Loss::Logistic, Loss::Squared] {
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let bias = rng.random::<f64>() - 0.5;
            let c = 2.5;
            let (_, gw, gb) = objective_and_gradient(loss, c, &x, &y, &w, bias);
            let h = 1e-5;
            for t in 0..d {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[t] += h;
                wm[t] -= h;
                let fp = objective_and_gradient(loss, c, &x, &y, &wp, bias).0;
                let fm = objective_and_gradient(loss, c, &x, &y, &wm, bias).0;
                let fd = (fp - fm) / (2.0 * h);
                assert!(
                    (gw[t] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                    "{:?} w[{}]: analytic {} vs fd {}",
                    loss,
                    t,
                    gw[t],
                    fd
                );
            }
            let fp = objective_and_gradient(loss, c, &x, &y, &w, bias + h).0;
            let fm = objective_and_gradient(loss, c, &x, &y, &w, bias - h).0;
            let fd = (fp - fm) / (2.0 * h);
            assert!((gb - fd).abs() <= 1e-5 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        let mut rng = crate::seed::stream_rng(4, "trace", 0);
        let x = feature_matrix(
            (0..30)
                .map(|_| (0..5).map(|_| rng.random::<f64>() - 0.5).collect())
                .collect(),
        );
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        for loss in [Loss::Logistic, Loss::Squared] {
            let cfg = TrainConfig {
                loss,
                c: 5.0,
                ..TrainConfig::default()
            };
            let (_, trace) = train_traced(&x, &y, Target::Azimuth, &cfg).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn squared_loss_predictions_are_scale_invariant() {
        // Features ×c with C/c² leaves predictions unchanged.
        let mut rng = crate::seed::stream_rng(8, "scale", 0);
        let cols: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..3).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let y: Vec<f64> = cols.iter().map(|c| 2.0 * c[0] - c[1] + 0.3).collect();
        let x1 = feature_matrix(cols.clone());
        let scale = 7.0;
        let x2 = feature_matrix(
            cols.iter()
                .map(|c| c.iter().map(|v| v * scale).collect())
                .collect(),
        );
        let base = TrainConfig {
            c: 3.0,
            loss: Loss::Squared,
            tol: 1e-14,
            max_iter: 2000,
            normalize_targets: false,
        };
        let m1 = train(&x1, &y, Target::Range, &base).unwrap();
        let m2 = train(
            &x2,
            &y,
            Target::Range,
            &TrainConfig {
                c: base.c / (scale * scale),
                ..base.clone()
            },
        )
        .unwrap();
        for (c, probe) in cols.iter().zip(0..) {
            let p1 = predict(&m1, c).unwrap();
            let scaled: Vec<f64> = c.iter().map(|v| v * scale).collect();
            let p2 = predict(&m2, &scaled).unwrap();
            assert!((p1 - p2).abs() < 1e-8, "sample {}: {} vs {}", probe, p1, p2);
        }
    }

    #[test]
    fn predict_checks_dimensions_and_identity_scale() {
        let model = LinearModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            target: Target::Range,
            c: 1.0,
            label_offset: 0.0,
            label_scale: 1.0,
            converged: true,
        };
        assert_eq!(predict(&model, &[1.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(
            predict(&model, &[1.0, 2.0, 3.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn model_round_trips_through_ccm1() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ccm");
        let model = LinearModel {
            weights: vec![0.25, -1.5, 3.75],
            bias: 0.125,
            target: Target::Azimuth,
            c: 10.0,
            label_offset: -0.5,
            label_scale: 2.0,
            converged: true,
        };
        model.save(&path).unwrap();
        let back = LinearModel::load(&path).unwrap();
        assert_eq!(back.weights, model.weights);
        assert_eq!(back.bias, model.bias);
        assert_eq!(back.target, Target::Azimuth);
        assert_eq!(back.label_offset, model.label_offset);
        assert_eq!(back.label_scale, model.label_scale);

        std::fs::write(&path, b"CCM9").unwrap();
        assert!(matches!(LinearModel::load(&path), Err(Error::Format(_))));
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let x = feature_matrix(vec![vec![1.0], vec![f64::NAN]]);
        let y = vec![1.0, 2.0];
        assert!(matches!(
            train(&x, &y, Target::Range, &TrainConfig::default()),
            Err(Error::Numeric(_))
        ));
    }
}
