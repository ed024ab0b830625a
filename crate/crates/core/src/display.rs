// SPDX-License-Identifier: MIT OR Apache-2.0

//! Virtual display optimizer.
//!
//! Jointly learns a row-stochastic membership matrix `mu` (n x K) and K
//! virtual exemplars `V` by minimizing
//!
//! ```text
//!   rep * sum_ik mu_ik |x_i - V_k|^2          representativity
//! + alpha * sum_k s_k log s_k                 diversity, s_k = sum_i mu_ik
//! + beta  * sum_k sum_c f_c(V_k) log f_c(V_k) ambiguity, f_1 = f, f_2 = 1 - f
//! + gamma * sum_ik mu_ik log mu_ik            membership entropy
//! ```
//!
//! through closed-form fixed-point updates, then maps each exemplar to its
//! nearest unlabeled real sample.
//!
//! Layout: data `X` is n x d (one sample per row), exemplars `V` are K x d
//! (one exemplar per row), and `mu` is n x K.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sq_euclidean, Mat};
use crate::rng;
use crate::scorer::Scorer;

/// Lower clamp for membership column masses before `log` or inversion.
pub const MASS_FLOOR: f64 = 1e-12;
/// Arguments below this contribute zero to `x log x`.
const XLOGX_FLOOR: f64 = 1e-300;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MAXITER: usize = 100;

/// Mixing coefficients of the display objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    /// Representativity toggle, serialized as 0/1.
    #[serde(with = "bool_as_int")]
    pub rep_on: bool,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            rep_on: true,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite and > 0, got {}",
                self.gamma
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn rep(&self) -> f64 {
        if self.rep_on {
            1.0
        } else {
            0.0
        }
    }
}

mod bool_as_int {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(D::Error::custom(format!(
                "rep_on must be 0 or 1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_delta: f64,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub membership: Mat,
    pub exemplars: Mat,
    pub report: SolveReport,
}

/// The four objective terms, already multiplied by their coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub representativity: f64,
    pub diversity: f64,
    pub ambiguity: f64,
    pub entropy: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.representativity + self.diversity + self.ambiguity + self.entropy
    }
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x < XLOGX_FLOOR {
        0.0
    } else {
        x * x.ln()
    }
}

fn check_cols(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_membership(data: &Mat, exemplars: &Mat, membership: &Mat) -> Result<()> {
    check_cols(data.cols(), exemplars.cols())?;
    if membership.rows() != data.rows() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            found: membership.rows(),
        });
    }
    check_cols(exemplars.rows(), membership.cols())
}

/// Squared Euclidean distances, K x n: entry `(k, i) = |x_i - V_k|^2`.
pub fn sq_dist(exemplars: &Mat, data: &Mat) -> Result<Mat> {
    check_cols(exemplars.cols(), data.cols())?;
    let mut out = Mat::zeros(exemplars.rows(), data.rows());
    for k in 0..exemplars.rows() {
        let v = exemplars.row(k);
        for (i, slot) in out.row_mut(k).iter_mut().enumerate() {
            *slot = sq_euclidean(data.row(i), v);
        }
    }
    Ok(out)
}

pub fn objective_terms(
    data: &Mat,
    exemplars: &Mat,
    membership: &Mat,
    scorer: &Scorer,
    w: &ObjectiveWeights,
) -> Result<ObjectiveTerms> {
    w.validate()?;
    check_membership(data, exemplars, membership)?;
    if !data.is_finite() || !exemplars.is_finite() || !membership.is_finite() {
        return Err(Error::NonFinite("objective inputs".into()));
    }
    let dist = sq_dist(exemplars, data)?;
    let k_count = exemplars.rows();

    let mut rep = 0.0;
    let mut ent = 0.0;
    for i in 0..data.rows() {
        for k in 0..k_count {
            let m = membership.get(i, k);
            rep += m * dist.get(k, i);
            ent += xlogx(m);
        }
    }
    let div: f64 = membership.col_sums().into_iter().map(xlogx).sum();
    let mut amb = 0.0;
    for k in 0..k_count {
        let f = scorer.score(exemplars.row(k))?;
        amb += f * f.ln() + (1.0 - f) * (1.0 - f).ln();
    }
    Ok(ObjectiveTerms {
        representativity: w.rep() * rep,
        diversity: w.alpha * div,
        ambiguity: w.beta * amb,
        entropy: w.gamma * ent,
    })
}

pub fn objective(
    data: &Mat,
    exemplars: &Mat,
    membership: &Mat,
    scorer: &Scorer,
    w: &ObjectiveWeights,
) -> Result<f64> {
    objective_terms(data, exemplars, membership, scorer, w).map(|t| t.total())
}

/// Membership update: `mu_ik ∝ exp(-(rep d_ik + alpha (1 + log s_k)) / gamma)`
/// normalized per row, where `s` are the column masses of the current
/// membership. Evaluated in log space with the row maximum subtracted.
pub fn update_membership(
    data: &Mat,
    exemplars: &Mat,
    membership: &Mat,
    w: &ObjectiveWeights,
) -> Result<Mat> {
    w.validate()?;
    check_membership(data, exemplars, membership)?;
    let dist = sq_dist(exemplars, data)?;
    let k_count = exemplars.rows();
    let rep = w.rep();
    let mass_term: Vec<f64> = membership
        .col_sums()
        .into_iter()
        .map(|s| w.alpha * (1.0 + s.max(MASS_FLOOR).ln()))
        .collect();

    let mut out = Mat::zeros(data.rows(), k_count);
    for i in 0..data.rows() {
        let row = out.row_mut(i);
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = -(rep * dist.get(k, i) + mass_term[k]) / w.gamma;
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::NonFinite(format!("membership exponent of row {i}")));
        }
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(out)
}

/// Exemplar update:
/// `V_k = (sum_i mu_ik x_i + beta sum_c grad f_c(V_k) (log f_c(V_k) + 1)) / s_k`.
pub fn update_exemplars(
    data: &Mat,
    exemplars: &Mat,
    membership: &Mat,
    scorer: &Scorer,
    w: &ObjectiveWeights,
) -> Result<Mat> {
    w.validate()?;
    check_membership(data, exemplars, membership)?;
    let k_count = exemplars.rows();
    let d = data.cols();
    let mut out = Mat::zeros(k_count, d);
    for i in 0..data.rows() {
        let x = data.row(i);
        for k in 0..k_count {
            let m = membership.get(i, k);
            for (o, xj) in out.row_mut(k).iter_mut().zip(x) {
                *o += m * xj;
            }
        }
    }
    if w.beta != 0.0 {
        let (g1, g2) = scorer.score_gradient(exemplars)?;
        for k in 0..k_count {
            let f = scorer.score(exemplars.row(k))?;
            let a1 = f.ln() + 1.0;
            let a2 = (1.0 - f).ln() + 1.0;
            for j in 0..d {
                let force = g1.get(k, j) * a1 + g2.get(k, j) * a2;
                let cur = out.get(k, j);
                out.set(k, j, cur + w.beta * force);
            }
        }
    }
    let masses = membership.col_sums();
    for (k, s) in masses.into_iter().enumerate() {
        let inv = 1.0 / s.max(MASS_FLOOR);
        out.row_mut(k).iter_mut().for_each(|v| *v *= inv);
    }
    if !out.is_finite() {
        return Err(Error::NonFinite("updated exemplars".into()));
    }
    Ok(out)
}

/// Random starting point: memberships uniform in (0, 1] then row-normalized,
/// exemplars set to K distinct data rows.
pub fn initialize(data: &Mat, k_count: usize, seed: u64) -> Result<(Mat, Mat)> {
    let n = data.rows();
    if k_count == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if n < k_count {
        return Err(Error::InsufficientPool {
            needed: k_count,
            available: n,
        });
    }
    let mut rng = rng::seeded(seed);
    let mut membership = Mat::zeros(n, k_count);
    for i in 0..n {
        let row = membership.row_mut(i);
        for v in row.iter_mut() {
            *v = 1.0 - rng.random::<f64>();
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
    let picks = index::sample(&mut rng, n, k_count);
    let mut exemplars = Mat::zeros(k_count, data.cols());
    for (k, i) in picks.into_iter().enumerate() {
        exemplars.row_mut(k).copy_from_slice(data.row(i));
    }
    Ok((membership, exemplars))
}

/// Runs the fixed-point iteration from a seeded random start.
pub fn solve(
    data: &Mat,
    scorer: &Scorer,
    w: &ObjectiveWeights,
    k_count: usize,
    epsilon: f64,
    maxiter: usize,
    seed: u64,
) -> Result<Solution> {
    let (membership, exemplars) = initialize(data, k_count, seed)?;
    solve_from(
        data,
        scorer,
        w,
        membership,
        exemplars,
        epsilon,
        maxiter,
        |_, _, _| {},
    )
}

/// Runs the fixed-point iteration from a given start. Each sweep updates the
/// memberships from the current exemplars, then the exemplars from the new
/// memberships. Stops once the L1 change
/// `|mu' - mu|_1 + |V' - V|_1` drops below `epsilon` or after `maxiter`
/// updates; `observe` sees every `(iteration, mu, V)` produced.
#[allow(clippy::too_many_arguments)]
pub fn solve_from(
    data: &Mat,
    scorer: &Scorer,
    w: &ObjectiveWeights,
    mut membership: Mat,
    mut exemplars: Mat,
    epsilon: f64,
    maxiter: usize,
    mut observe: impl FnMut(usize, &Mat, &Mat),
) -> Result<Solution> {
    w.validate()?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    if maxiter == 0 {
        return Err(Error::InvalidParameter("maxiter must be at least 1".into()));
    }
    check_membership(data, &exemplars, &membership)?;
    if exemplars.rows() == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }

    let mut trace = vec![objective(data, &exemplars, &membership, scorer, w)?];
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    while iterations < maxiter {
        let next_mu = update_membership(data, &exemplars, &membership, w)?;
        let next_v = update_exemplars(data, &exemplars, &next_mu, scorer, w)?;
        delta = next_mu.l1_distance(&membership) + next_v.l1_distance(&exemplars);
        membership = next_mu;
        exemplars = next_v;
        iterations += 1;
        observe(iterations, &membership, &exemplars);
        trace.push(objective(data, &exemplars, &membership, scorer, w)?);
        if delta < epsilon {
            break;
        }
    }
    Ok(Solution {
        membership,
        exemplars,
        report: SolveReport {
            iterations,
            final_delta: delta,
            converged: delta < epsilon,
            objective_trace: trace,
        },
    })
}

/// Maps exemplars to real samples: for k = 1..K in order, the nearest pool
/// sample that is neither forbidden nor already chosen (ties to the smaller
/// id). `pool` holds one feature row per entry of `pool_ids`.
pub fn select_display(
    exemplars: &Mat,
    pool_ids: &[usize],
    pool: &Mat,
    forbidden: &BTreeSet<usize>,
) -> Result<Vec<usize>> {
    if pool.rows() != pool_ids.len() {
        return Err(Error::DimensionMismatch {
            expected: pool_ids.len(),
            found: pool.rows(),
        });
    }
    check_cols(pool.cols(), exemplars.cols())?;
    let k_count = exemplars.rows();
    let mut available: Vec<usize> = (0..pool_ids.len())
        .filter(|&r| !forbidden.contains(&pool_ids[r]))
        .collect();
    if available.len() < k_count {
        return Err(Error::InsufficientPool {
            needed: k_count,
            available: available.len(),
        });
    }

    let mut chosen = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let v = exemplars.row(k);
        let mut best: Option<(usize, f64)> = None;
        for (slot, &r) in available.iter().enumerate() {
            let dist = sq_euclidean(pool.row(r), v);
            let better = match best {
                None => true,
                Some((b, bd)) => dist < bd || (dist == bd && pool_ids[r] < pool_ids[available[b]]),
            };
            if better {
                best = Some((slot, dist));
            }
        }
        let (slot, _) = best.expect("available is non-empty");
        chosen.push(pool_ids[available.swap_remove(slot)]);
    }
    Ok(chosen)
}
