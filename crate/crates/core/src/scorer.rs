// SPDX-License-Identifier: MIT OR Apache-2.0

//! Probabilistic binary scorer `f(x) = sigmoid(w.x + b)` with closed-form
//! input gradients.
//!
//! Training minimizes the (optionally class-balanced) L2-regularized
//! logistic loss by full-batch gradient descent with Armijo backtracking,
//! so every accepted step strictly lowers the loss and runs are
//! bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};

/// Probabilities are clamped to `[P_EPS, 1 - P_EPS]` so `log f` stays finite.
pub const P_EPS: f64 = 1e-12;

/// Prior range used for a scorer trained on a single class.
const DEGENERATE_PRIOR: (f64, f64) = (0.05, 0.95);

const ARMIJO_C: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub l2_strength: f64,
    pub max_epochs: usize,
    pub grad_tol: f64,
    pub class_balanced: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_strength: 1e-2,
            max_epochs: 500,
            grad_tol: 1e-6,
            class_balanced: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l2_strength must be a finite value >= 0, got {}",
                self.l2_strength
            )));
        }
        if self.grad_tol.is_nan() || self.grad_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grad_tol must be > 0, got {}",
                self.grad_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorer {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub trained_on: usize,
    #[serde(default)]
    pub degenerate: bool,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(P_EPS, 1.0 - P_EPS)
}

impl Scorer {
    /// Constant scorer `f = 0.5`.
    pub fn zero(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            trained_on: 0,
            degenerate: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: len,
            });
        }
        Ok(())
    }

    /// Raw decision value `w.x + b`.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// Clamped probability of the change class.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(clamp_prob(sigmoid(self.margin(x)?)))
    }

    /// Scores every row of `rows`.
    pub fn score_rows(&self, rows: &Mat) -> Result<Vec<f64>> {
        (0..rows.rows()).map(|r| self.score(rows.row(r))).collect()
    }

    /// Input gradients of the two class scores `f_1 = f` and `f_2 = 1 - f`
    /// at each exemplar (one row per exemplar):
    /// `grad f_1 = f (1 - f) w`, `grad f_2 = -grad f_1`.
    pub fn score_gradient(&self, exemplars: &Mat) -> Result<(Mat, Mat)> {
        self.check_dim(exemplars.cols())?;
        if !exemplars.is_finite() {
            return Err(Error::NonFinite("exemplars".into()));
        }
        let k = exemplars.rows();
        let mut g1 = Mat::zeros(k, self.dim());
        let mut g2 = Mat::zeros(k, self.dim());
        for r in 0..k {
            let f = self.score(exemplars.row(r))?;
            let s = f * (1.0 - f);
            for (j, w) in self.weights.iter().enumerate() {
                g1.set(r, j, s * w);
                g2.set(r, j, -(s * w));
            }
        }
        Ok((g1, g2))
    }
}

/// Loss trace of a training run, one entry per accepted epoch plus the
/// initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
    pub epochs: usize,
    pub final_grad_norm: f64,
}

pub fn train(features: &Mat, labels: &[Label], cfg: &TrainConfig) -> Result<Scorer> {
    train_with_trace(features, labels, cfg).map(|(s, _)| s)
}

pub fn train_with_trace(
    features: &Mat,
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<(Scorer, TrainTrace)> {
    cfg.validate()?;
    let n = features.rows();
    let d = features.cols();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if n == 0 {
        return Err(Error::Empty("training set".into()));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("training features".into()));
    }

    let n_pos = labels.iter().filter(|l| l.is_change()).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        let prior = (n_pos as f64 / n as f64).clamp(DEGENERATE_PRIOR.0, DEGENERATE_PRIOR.1);
        let scorer = Scorer {
            weights: vec![0.0; d],
            bias: (prior / (1.0 - prior)).ln(),
            trained_on: n,
            degenerate: true,
        };
        let trace = TrainTrace {
            losses: Vec::new(),
            epochs: 0,
            final_grad_norm: 0.0,
        };
        return Ok((scorer, trace));
    }

    let (w_pos, w_neg) = if cfg.class_balanced {
        (
            n as f64 / (2.0 * n_pos as f64),
            n as f64 / (2.0 * n_neg as f64),
        )
    } else {
        (1.0, 1.0)
    };
    let problem = Problem {
        features,
        y: labels.iter().map(|l| l.as_f64()).collect(),
        c: labels
            .iter()
            .map(|l| if l.is_change() { w_pos } else { w_neg })
            .collect(),
        l2: cfg.l2_strength,
    };

    // params = [w_0..w_{d-1}, b]
    let mut params = vec![0.0; d + 1];
    let mut loss = problem.loss(&params);
    let mut grad = problem.gradient(&params);
    let mut losses = vec![loss];
    let mut step = 1.0;
    let mut epochs = 0;
    let mut trial = vec![0.0; d + 1];

    while epochs < cfg.max_epochs {
        let gmax = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gmax < cfg.grad_tol {
            break;
        }
        let gsq: f64 = grad.iter().map(|g| g * g).sum();
        let mut accepted = None;
        while step >= MIN_STEP {
            for ((t, p), g) in trial.iter_mut().zip(&params).zip(&grad) {
                *t = p - step * g;
            }
            let candidate = problem.loss(&trial);
            if candidate <= loss - ARMIJO_C * step * gsq {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else { break };
        std::mem::swap(&mut params, &mut trial);
        loss = new_loss;
        losses.push(loss);
        grad = problem.gradient(&params);
        epochs += 1;
        step = (step * 2.0).min(MAX_STEP);
    }

    let final_grad_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let bias = params.pop().expect("bias slot");
    Ok((
        Scorer {
            weights: params,
            bias,
            trained_on: n,
            degenerate: false,
        },
        TrainTrace {
            losses,
            epochs,
            final_grad_norm,
        },
    ))
}

struct Problem<'a> {
    features: &'a Mat,
    y: Vec<f64>,
    c: Vec<f64>,
    l2: f64,
}

impl Problem<'_> {
    fn margin(&self, params: &[f64], i: usize) -> f64 {
        let d = self.features.cols();
        dot(&params[..d], self.features.row(i)) + params[d]
    }

    fn loss(&self, params: &[f64]) -> f64 {
        let n = self.features.rows();
        let d = self.features.cols();
        let data: f64 = (0..n)
            .map(|i| self.c[i] * softplus(-self.y[i] * self.margin(params, i)))
            .sum();
        let reg: f64 = params[..d].iter().map(|w| w * w).sum();
        data / n as f64 + 0.5 * self.l2 * reg
    }

    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let n = self.features.rows();
        let d = self.features.cols();
        let mut g = vec![0.0; d + 1];
        for i in 0..n {
            let yz = self.y[i] * self.margin(params, i);
            let coef = -self.c[i] * self.y[i] * sigmoid(-yz) / n as f64;
            for (gj, xj) in g[..d].iter_mut().zip(self.features.row(i)) {
                *gj += coef * xj;
            }
            g[d] += coef;
        }
        for (gj, w) in g[..d].iter_mut().zip(&params[..d]) {
            *gj += self.l2 * w;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[i64]) -> Vec<Label> {
        v.iter().map(|&l| Label::try_from(l).unwrap()).collect()
    }

    #[test]
    fn symmetric_pair_gives_midpoint_boundary() {
        let x = Mat::from_rows(&[[-1.0], [1.0]]).unwrap();
        let s = train(&x, &labels(&[-1, 1]), &TrainConfig::default()).unwrap();
        assert_eq!(s.bias, 0.0);
        assert_eq!(s.score(&[0.0]).unwrap(), 0.5);
        assert!(s.weights[0] > 0.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = Mat::from_rows(&[[0.3, 1.0], [2.0, -1.0], [0.0, 0.0]]).unwrap();
        let s = train(&x, &labels(&[-1, -1, -1]), &TrainConfig::default()).unwrap();
        assert!(s.degenerate);
        assert!(s.weights.iter().all(|&w| w == 0.0));
        let f = s.score(&[5.0, 5.0]).unwrap();
        assert!((f - 0.05).abs() < 1e-12);
        assert_eq!(f, s.score(&[-3.0, 1.0]).unwrap());

        let s = train(&x, &labels(&[1, 1, 1]), &TrainConfig::default()).unwrap();
        assert!((s.score(&[0.0, 0.0]).unwrap() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn zero_scorer_is_half_everywhere() {
        let s = Scorer::zero(3);
        assert_eq!(s.score(&[1.0, -7.0, 1e9]).unwrap(), 0.5);
    }

    #[test]
    fn extreme_margins_are_clamped() {
        let s = Scorer {
            weights: vec![1.0],
            bias: 0.0,
            trained_on: 0,
            degenerate: false,
        };
        let hi = s.score(&[1e6]).unwrap();
        assert_eq!(hi, 1.0 - P_EPS);
        assert!(hi.ln().is_finite() && (1.0 - hi).ln().is_finite());
        assert_eq!(s.score(&[-1e6]).unwrap(), P_EPS);
    }

    #[test]
    fn score_increases_along_weights() {
        let s = Scorer {
            weights: vec![0.5, -1.5],
            bias: 0.2,
            trained_on: 0,
            degenerate: false,
        };
        let mut prev = 0.0;
        for step in -10..=10 {
            let t = step as f64 * 0.3;
            let f = s.score(&[0.5 * t, -1.5 * t]).unwrap();
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = Scorer::zero(2);
        assert!(matches!(
            s.score(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(s.score_gradient(&Mat::zeros(3, 4)).is_err());
    }

    #[test]
    fn gradient_at_half_is_quarter_weights() {
        let s = Scorer {
            weights: vec![3.0, -4.0],
            bias: 0.0,
            trained_on: 0,
            degenerate: false,
        };
        let v = Mat::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let (g1, g2) = s.score_gradient(&v).unwrap();
        let norm: f64 = g1.row(0).iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!((norm - 0.25 * 5.0).abs() < 1e-15);
        for j in 0..2 {
            assert_eq!(g2.get(1, j), -g1.get(1, j));
        }
        let (z1, z2) = Scorer::zero(2).score_gradient(&v).unwrap();
        assert!(z1.as_slice().iter().chain(z2.as_slice()).all(|&g| g == 0.0));
    }

    #[test]
    fn loss_never_increases() {
        let x = Mat::from_rows(&[
            [0.0, 1.0],
            [1.0, 0.2],
            [2.0, 2.0],
            [-1.0, 0.5],
            [0.4, -1.2],
            [1.5, 1.1],
        ])
        .unwrap();
        let y = labels(&[-1, 1, 1, -1, -1, 1]);
        let (_, trace) = train_with_trace(&x, &y, &TrainConfig::default()).unwrap();
        assert!(trace.epochs > 0);
        for w in trace.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let x = Mat::from_rows(&[[0.1, 1.0], [1.0, 0.2], [2.0, -2.0], [-1.0, 0.5]]).unwrap();
        let y = labels(&[-1, 1, 1, -1]);
        let cfg = TrainConfig::default();
        assert_eq!(train(&x, &y, &cfg).unwrap(), train(&x, &y, &cfg).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        let x = Mat::from_rows(&[[0.0], [1.0]]).unwrap();
        let y = labels(&[-1, 1]);
        let cfg = TrainConfig {
            grad_tol: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(&x, &y, &cfg).is_err());
        let cfg = TrainConfig {
            l2_strength: -1.0,
            ..TrainConfig::default()
        };
        assert!(train(&x, &y, &cfg).is_err());
    }
}
