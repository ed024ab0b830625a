// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

/// Metrics recorded after the scorer of one iteration has been trained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// 1-based iteration: number of displays labeled so far.
    pub iter: usize,
    pub eer: f64,
    pub samp_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTable {
    pub label: String,
    pub records: Vec<EvalRecord>,
    pub auc: f64,
}

impl RunTable {
    pub fn new(label: impl Into<String>, records: Vec<EvalRecord>) -> Result<Self> {
        let auc = auc(&records)?;
        Ok(Self {
            label: label.into(),
            records,
            auc,
        })
    }

    pub fn final_eer(&self) -> Option<f64> {
        self.records.last().map(|r| r.eer)
    }
}

/// Error counts at one threshold: negatives scored `>= theta` and positives
/// scored `< theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCounts {
    pub false_pos: usize,
    pub false_neg: usize,
}

/// Equal error rate in percent.
///
/// Candidate thresholds are -inf, the midpoints of consecutive distinct
/// sorted scores, and +inf. The chosen threshold minimizes `|FPR - FNR|`,
/// then `FPR + FNR`, then the threshold itself; the result is
/// `100 (FPR + FNR) / 2` there. Scores are never flipped, so a scorer that
/// ranks the classes backwards yields more than 50.
pub fn eer(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (&s, l) in scores.iter().zip(labels) {
        if l.is_change() {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass(
            "eer needs both positive and negative samples".into(),
        ));
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);

    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let counts_at = |theta: f64| ErrorCounts {
        false_pos: neg.len() - neg.partition_point(|&s| s < theta),
        false_neg: pos.partition_point(|&s| s < theta),
    };
    let thresholds = std::iter::once(f64::NEG_INFINITY)
        .chain(distinct.windows(2).map(|w| midpoint(w[0], w[1])))
        .chain(std::iter::once(f64::INFINITY));

    let (n_pos, n_neg) = (pos.len(), neg.len());
    let mut best: Option<(u128, u128, ErrorCounts)> = None;
    for theta in thresholds {
        let c = counts_at(theta);
        let key = balance_key(c, n_pos, n_neg);
        if best.is_none_or(|(gap, sum, _)| (key.0, key.1) < (gap, sum)) {
            best = Some((key.0, key.1, c));
        }
    }
    let (_, _, c) = best.expect("at least two thresholds");
    Ok(rate_pct(c, n_pos, n_neg))
}

/// Threshold between two adjacent sorted scores.
#[inline]
pub fn midpoint(a: f64, b: f64) -> f64 {
    0.5 * a + 0.5 * b
}

/// Exact comparison key `(|FPR - FNR|, FPR + FNR)` scaled by `P * N` so
/// ties are decided on integers.
#[inline]
pub fn balance_key(c: ErrorCounts, n_pos: usize, n_neg: usize) -> (u128, u128) {
    let fp_scaled = c.false_pos as u128 * n_pos as u128;
    let fn_scaled = c.false_neg as u128 * n_neg as u128;
    (fp_scaled.abs_diff(fn_scaled), fp_scaled + fn_scaled)
}

#[inline]
pub fn rate_pct(c: ErrorCounts, n_pos: usize, n_neg: usize) -> f64 {
    // (FPR + FNR) / 2 over a common denominator, so equal sums give equal bits.
    let (_, sum) = balance_key(c, n_pos, n_neg);
    100.0 * sum as f64 / (2 * n_pos as u128 * n_neg as u128) as f64
}

/// Cumulative labeled share of the training half after `t` displays of
/// size `k`, in percent: `100 t k / (n / 2)`.
pub fn sampling_rate(t: usize, k: usize, n: usize) -> f64 {
    100.0 * (t * k) as f64 / (n as f64 / 2.0)
}

/// Mean EER across iterations (the "AUC" of an active-learning curve).
pub fn auc(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("auc needs at least one record".into()));
    }
    Ok(records.iter().map(|r| r.eer).sum::<f64>() / records.len() as f64)
}

/// Two-decimal rendering for EER and AUC values (half away from zero).
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Two-decimal rendering for sampling rates, truncated toward zero as in
/// published active-learning tables (1.4545... -> 1.45, 14.5454... -> 14.54).
pub fn truncate2(x: f64) -> f64 {
    (x * 100.0 + 1e-9).floor() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(v: &[i64]) -> Vec<Label> {
        v.iter().map(|&l| Label::try_from(l).unwrap()).collect()
    }

    #[test]
    fn separable_scores_have_zero_eer() {
        let s = [0.1, 0.2, 0.8, 0.9];
        assert_eq!(eer(&s, &lab(&[-1, -1, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn three_by_three_example() {
        let s = [0.9, 0.7, 0.4, 0.6, 0.3, 0.2];
        let e = eer(&s, &lab(&[1, 1, 1, -1, -1, -1])).unwrap();
        assert!((e - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(round2(e), 33.33);
    }

    #[test]
    fn identical_scores_give_fifty() {
        let s = [0.3; 5];
        assert_eq!(eer(&s, &lab(&[1, -1, -1, 1, -1])).unwrap(), 50.0);
    }

    #[test]
    fn reversed_scorer_exceeds_fifty() {
        let s = [0.9, 0.8, 0.1, 0.2];
        assert_eq!(eer(&s, &lab(&[-1, -1, 1, 1])).unwrap(), 100.0);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(eer(&[0.1, 0.2], &lab(&[1, 1])).is_err());
        assert!(eer(&[0.1], &lab(&[1, -1])).is_err());
    }

    #[test]
    fn table_sampling_rates() {
        assert_eq!(truncate2(sampling_rate(1, 16, 2200)), 1.45);
        assert_eq!(truncate2(sampling_rate(10, 16, 2200)), 14.54);
        assert_eq!(sampling_rate(1, 1100, 2200), 100.0);
        let expected = [
            1.45, 2.90, 4.36, 5.81, 7.27, 8.72, 10.18, 11.63, 13.09, 14.54,
        ];
        for (t, e) in (1..=10).zip(expected) {
            assert_eq!(truncate2(sampling_rate(t, 16, 2200)), e);
        }
    }

    fn recs(eers: &[f64]) -> Vec<EvalRecord> {
        eers.iter()
            .enumerate()
            .map(|(i, &eer)| EvalRecord {
                iter: i + 1,
                eer,
                samp_pct: 0.0,
            })
            .collect()
    }

    #[test]
    fn auc_of_full_model_row() {
        let row = [
            47.81, 27.61, 11.76, 5.74, 2.95, 2.39, 1.89, 1.61, 1.55, 1.34,
        ];
        assert_eq!(round2(auc(&recs(&row)).unwrap()), 10.47);
    }

    #[test]
    fn auc_edge_cases() {
        assert_eq!(auc(&recs(&[5.0])).unwrap(), 5.0);
        assert_eq!(auc(&recs(&[3.25; 7])).unwrap(), 3.25);
        assert!(auc(&[]).is_err());
    }
}
