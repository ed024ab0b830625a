// SPDX-License-Identifier: MIT OR Apache-2.0

//! Patch-pair datasets: types, stratified splitting, synthetic generation
//! and on-disk persistence.

mod io;
mod synth;

pub use io::{load, save, Manifest};
pub use synth::{
    block_features, default_benchmark, generate_synthetic, DEFAULT_N, DEFAULT_POSITIVES,
    DEFAULT_SEED, PIXEL_DIM,
};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng;

/// Side length of a stored patch.
pub const PATCH_SIDE: usize = 30;
pub const PATCH_LEN: usize = PATCH_SIDE * PATCH_SIDE;

/// Ground-truth answer for a patch pair: relevant change or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Label {
    NoChange,
    Change,
}

impl Label {
    pub fn as_i64(self) -> i64 {
        match self {
            Label::Change => 1,
            Label::NoChange => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_i64() as f64
    }

    pub fn is_change(self) -> bool {
        self == Label::Change
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Change => Label::NoChange,
            Label::NoChange => Label::Change,
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Label::Change),
            -1 => Ok(Label::NoChange),
            other => Err(Error::Validation(format!(
                "label must be -1 or +1 (got {other})"
            ))),
        }
    }
}

impl From<Label> for i64 {
    fn from(l: Label) -> i64 {
        l.as_i64()
    }
}

/// A 30x30 grayscale patch, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct PixelGrid(Vec<u8>);

impl PixelGrid {
    pub fn new(pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != PATCH_LEN {
            return Err(Error::Validation(format!(
                "pixel grid must be {PATCH_SIDE}x{PATCH_SIDE}, got {} values",
                pixels.len()
            )));
        }
        Ok(Self(pixels))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.0[row * PATCH_SIDE + col]
    }
}

impl TryFrom<Vec<u8>> for PixelGrid {
    type Error = Error;
    fn try_from(v: Vec<u8>) -> Result<Self> {
        PixelGrid::new(v)
    }
}

impl From<PixelGrid> for Vec<u8> {
    fn from(g: PixelGrid) -> Vec<u8> {
        g.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: usize,
    pub features: Vec<f64>,
    pub label: Label,
    pub pixels_before: Option<PixelGrid>,
    pub pixels_after: Option<PixelGrid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub dim: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Checks the structural invariants: contiguous ids from 0, shared
    /// dimension, finite features, and before/after grids present together.
    pub fn validate(&self) -> Result<()> {
        for (pos, s) in self.samples.iter().enumerate() {
            if s.id != pos {
                return Err(Error::Format(format!(
                    "sample ids must be contiguous from 0: position {pos} holds id {}",
                    s.id
                )));
            }
            if s.features.len() != self.dim {
                return Err(Error::Format(format!(
                    "sample {}: expected {} features, found {}",
                    s.id,
                    self.dim,
                    s.features.len()
                )));
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("features of sample {}", s.id)));
            }
            if s.pixels_before.is_some() != s.pixels_after.is_some() {
                return Err(Error::Format(format!(
                    "sample {}: pixel grids must come in pairs",
                    s.id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label.is_change()).count()
    }

    pub fn has_pixels(&self) -> bool {
        self.samples.iter().any(|s| s.pixels_before.is_some())
    }

    pub fn label(&self, id: usize) -> Label {
        self.samples[id].label
    }

    pub fn features(&self, id: usize) -> &[f64] {
        &self.samples[id].features
    }

    /// Feature matrix with one row per requested id, in order.
    pub fn feature_matrix(&self, ids: &[usize]) -> Mat {
        let mut m = Mat::zeros(ids.len(), self.dim);
        for (r, &id) in ids.iter().enumerate() {
            m.row_mut(r).copy_from_slice(&self.samples[id].features);
        }
        m
    }
}

/// Disjoint train/eval halves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_ids: Vec<usize>,
    pub eval_ids: Vec<usize>,
}

/// Stratified half split: each class is shuffled separately and divided so
/// that halves differ by at most one sample overall and one positive.
pub fn split_half(ds: &Dataset, seed: u64) -> Result<Split> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "split needs at least 2 samples, got {n}"
        )));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for s in &ds.samples {
        if s.label.is_change() {
            pos.push(s.id);
        } else {
            neg.push(s.id);
        }
    }
    let mut rng = rng::seeded(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let train_size = n / 2;
    let train_pos = pos.len() / 2;
    let train_neg = train_size - train_pos;

    let mut train_ids: Vec<usize> = pos[..train_pos]
        .iter()
        .chain(&neg[..train_neg])
        .copied()
        .collect();
    let mut eval_ids: Vec<usize> = pos[train_pos..]
        .iter()
        .chain(&neg[train_neg..])
        .copied()
        .collect();
    train_ids.sort_unstable();
    eval_ids.sort_unstable();
    Ok(Split {
        train_ids,
        eval_ids,
    })
}

impl Split {
    pub fn validate(&self, n: usize) -> Result<()> {
        let train: BTreeSet<usize> = self.train_ids.iter().copied().collect();
        let eval: BTreeSet<usize> = self.eval_ids.iter().copied().collect();
        if train.len() != self.train_ids.len() || eval.len() != self.eval_ids.len() {
            return Err(Error::Validation("split contains duplicate ids".into()));
        }
        if train.intersection(&eval).next().is_some() {
            return Err(Error::Validation("split halves overlap".into()));
        }
        if train.len() + eval.len() != n || train.union(&eval).any(|&id| id >= n) {
            return Err(Error::Validation("split does not cover the dataset".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(labels: &[i64]) -> Dataset {
        Dataset {
            name: "tiny".into(),
            dim: 1,
            samples: labels
                .iter()
                .enumerate()
                .map(|(id, &l)| Sample {
                    id,
                    features: vec![id as f64],
                    label: Label::try_from(l).unwrap(),
                    pixels_before: None,
                    pixels_after: None,
                })
                .collect(),
        }
    }

    #[test]
    fn label_rejects_zero() {
        let err = Label::try_from(0).unwrap_err();
        assert!(err.to_string().contains("label must be -1 or +1"));
    }

    #[test]
    fn split_of_four_puts_one_positive_in_each_half() {
        let ds = tiny(&[1, -1, 1, -1]);
        let split = split_half(&ds, 3).unwrap();
        split.validate(4).unwrap();
        assert_eq!(split.train_ids.len(), 2);
        assert_eq!(split.eval_ids.len(), 2);
        let pos_in = |ids: &[usize]| ids.iter().filter(|&&i| ds.label(i).is_change()).count();
        assert_eq!(pos_in(&split.train_ids), 1);
        assert_eq!(pos_in(&split.eval_ids), 1);
    }

    #[test]
    fn split_is_seeded() {
        let ds = tiny(&[1, -1, 1, -1, -1, -1, 1, -1, -1]);
        assert_eq!(split_half(&ds, 9).unwrap(), split_half(&ds, 9).unwrap());
    }

    #[test]
    fn split_rejects_singleton() {
        assert!(split_half(&tiny(&[1]), 0).is_err());
    }

    #[test]
    fn stratification_holds_across_seed_sweep() {
        let labels: Vec<i64> = (0..57).map(|i| if i % 7 == 0 { 1 } else { -1 }).collect();
        let ds = tiny(&labels);
        for seed in 0..100 {
            let split = split_half(&ds, seed).unwrap();
            split.validate(ds.len()).unwrap();
            let p_train = split
                .train_ids
                .iter()
                .filter(|&&i| ds.label(i).is_change())
                .count();
            let p_eval = split
                .eval_ids
                .iter()
                .filter(|&&i| ds.label(i).is_change())
                .count();
            assert!(p_train.abs_diff(p_eval) <= 1);
            assert!(split.train_ids.len().abs_diff(split.eval_ids.len()) <= 1);
        }
    }

    #[test]
    fn validate_catches_gaps_and_dims() {
        let mut ds = tiny(&[1, -1]);
        ds.samples[1].id = 5;
        assert!(ds.validate().is_err());
        let mut ds = tiny(&[1, -1]);
        ds.samples[0].features.push(1.0);
        assert!(ds.validate().is_err());
    }
}
