// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic stand-in for a bi-temporal change-detection benchmark.
//!
//! The change class is rare and localized. Negatives come from several
//! modes of "irrelevant" variation; positives live in a separate sparse
//! region. With `dim == 16` every sample is backed by a pair of 30x30
//! patches and its features are the 4x4 block means of `|after - before|`.

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Label, PixelGrid, Sample, PATCH_LEN, PATCH_SIDE};
use crate::error::{Error, Result};
use crate::rng;

/// Feature dimension that switches on the pixel-backed generator.
pub const PIXEL_DIM: usize = 16;

/// Default benchmark size and class counts.
pub const DEFAULT_N: usize = 2200;
pub const DEFAULT_POSITIVES: usize = 39;
pub const DEFAULT_SEED: u64 = 7;

/// The default benchmark: pixel mode, 2200 samples, 39 changes.
pub fn default_benchmark() -> Result<Dataset> {
    generate_synthetic(
        DEFAULT_N,
        PIXEL_DIM,
        DEFAULT_POSITIVES as f64 / DEFAULT_N as f64,
        DEFAULT_SEED,
    )
}

const BLOCKS: usize = 4;

// Vector mode.
const NEG_MODES: usize = 4;
const NEG_MODE_WEIGHTS: [f64; NEG_MODES] = [0.4, 0.3, 0.2, 0.1];
const NEG_CENTER_SPREAD: f64 = 2.0;
/// Per-mode spread; the last mode is broad clutter (cloud-like irrelevant
/// changes) that overlaps the change region.
const NEG_SPREADS: [f64; NEG_MODES] = [0.7, 0.7, 0.7, 2.0];
const POS_OFFSET: f64 = 3.5;
const POS_SPREAD: f64 = 0.5;

// Pixel mode.
const SENSOR_NOISE: f64 = 3.0;
const TEXTURE_NOISE: f64 = 12.0;
/// Max offset of the inserted change square from the patch center.
const SQUARE_JITTER: i64 = 4;

pub fn generate_synthetic(n: usize, dim: usize, pos_fraction: f64, seed: u64) -> Result<Dataset> {
    if !pos_fraction.is_finite() {
        return Err(Error::InvalidParameter(
            "pos_fraction must be finite".into(),
        ));
    }
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "n must be at least 4, got {n}"
        )));
    }
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "dim must be at least 2, got {dim}"
        )));
    }
    if !(pos_fraction > 0.0 && pos_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pos_fraction must lie in (0, 1), got {pos_fraction}"
        )));
    }
    let n_pos = (n as f64 * pos_fraction).round() as usize;
    if n_pos == 0 {
        return Err(Error::InvalidParameter(format!(
            "round(n * pos_fraction) = 0 for n={n}, pos_fraction={pos_fraction}"
        )));
    }
    if n_pos >= n {
        return Err(Error::InvalidParameter(format!(
            "round(n * pos_fraction) = {n_pos} leaves no negatives"
        )));
    }

    let mut rng = rng::seeded(seed);
    let mut labels: Vec<Label> = (0..n)
        .map(|i| {
            if i < n_pos {
                Label::Change
            } else {
                Label::NoChange
            }
        })
        .collect();
    labels.shuffle(&mut rng);

    let samples = if dim == PIXEL_DIM {
        labels
            .iter()
            .enumerate()
            .map(|(id, &label)| pixel_sample(id, label, &mut rng))
            .collect()
    } else {
        let layout = VectorLayout::draw(dim, &mut rng);
        labels
            .iter()
            .enumerate()
            .map(|(id, &label)| layout.sample(id, label, &mut rng))
            .collect()
    };

    let ds = Dataset {
        name: format!("synthetic-n{n}-d{dim}-s{seed}"),
        dim,
        samples,
    };
    ds.validate()?;
    Ok(ds)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn pick_mode(rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (m, w) in NEG_MODE_WEIGHTS.iter().enumerate() {
        acc += w;
        if u < acc {
            return m;
        }
    }
    NEG_MODES - 1
}

/// Mode centers for the vector generator. Axis 0 carries the change
/// signal: negative modes sit at or below 0.5 there, positives well above.
struct VectorLayout {
    neg_centers: Vec<Vec<f64>>,
    pos_center: Vec<f64>,
}

impl VectorLayout {
    fn draw(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let along = Uniform::new(-1.5, 0.5).expect("valid range");
        let neg_centers = (0..NEG_MODES)
            .map(|_| {
                let mut c: Vec<f64> = (0..dim).map(|_| NEG_CENTER_SPREAD * normal(rng)).collect();
                c[0] = along.sample(rng);
                c
            })
            .collect();
        let mut pos_center: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        pos_center[0] = POS_OFFSET;
        Self {
            neg_centers,
            pos_center,
        }
    }

    fn sample(&self, id: usize, label: Label, rng: &mut ChaCha8Rng) -> Sample {
        let (center, spread) = match label {
            Label::Change => (&self.pos_center, POS_SPREAD),
            Label::NoChange => {
                let m = pick_mode(rng);
                (&self.neg_centers[m], NEG_SPREADS[m])
            }
        };
        let features = center.iter().map(|c| c + spread * normal(rng)).collect();
        Sample {
            id,
            features,
            label,
            pixels_before: None,
            pixels_after: None,
        }
    }
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Draws one before/after pair. Negative modes model irrelevant changes:
/// sensor noise only, a global illumination shift, and a half-patch shadow.
/// Positives get an inserted bright square.
fn pixel_sample(id: usize, label: Label, rng: &mut ChaCha8Rng) -> Sample {
    let level = rng.random_range(70.0..170.0);
    let base: Vec<f64> = (0..PATCH_LEN)
        .map(|_| level + TEXTURE_NOISE * normal(rng))
        .collect();
    let before: Vec<u8> = base
        .iter()
        .map(|&b| to_u8(b + SENSOR_NOISE * normal(rng)))
        .collect();
    let mut after: Vec<f64> = base
        .iter()
        .map(|&b| b + SENSOR_NOISE * normal(rng))
        .collect();

    match label {
        Label::NoChange => match pick_mode(rng) {
            0 => {}
            1 => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let shift = sign * rng.random_range(6.0..10.0);
                after.iter_mut().for_each(|v| *v += shift);
            }
            2 | 3 => {
                let vertical = rng.random::<bool>();
                let first_half = rng.random::<bool>();
                let depth = rng.random_range(10.0..14.0);
                for r in 0..PATCH_SIDE {
                    for c in 0..PATCH_SIDE {
                        let coord = if vertical { c } else { r };
                        if (coord < PATCH_SIDE / 2) == first_half {
                            after[r * PATCH_SIDE + c] -= depth;
                        }
                    }
                }
            }
            _ => unreachable!(),
        },
        Label::Change => {
            let side = rng.random_range(9..=13usize);
            let jitter = |rng: &mut ChaCha8Rng| {
                let centered = (PATCH_SIDE - side) / 2;
                (centered as i64 + rng.random_range(-SQUARE_JITTER..=SQUARE_JITTER)) as usize
            };
            let top = jitter(rng);
            let left = jitter(rng);
            let bright = rng.random_range(235.0..255.0);
            for r in top..top + side {
                for c in left..left + side {
                    after[r * PATCH_SIDE + c] = bright;
                }
            }
        }
    }

    let before = PixelGrid::new(before).expect("fixed patch size");
    let after = PixelGrid::new(after.into_iter().map(to_u8).collect()).expect("fixed patch size");
    Sample {
        id,
        features: block_features(&before, &after),
        label,
        pixels_before: Some(before),
        pixels_after: Some(after),
    }
}

/// 4x4 block means of the absolute difference between two patches, in
/// row-major block order. Block edges fall at `floor(i * 30 / 4)`.
pub fn block_features(before: &PixelGrid, after: &PixelGrid) -> Vec<f64> {
    let edge = |i: usize| i * PATCH_SIDE / BLOCKS;
    let mut out = Vec::with_capacity(BLOCKS * BLOCKS);
    for br in 0..BLOCKS {
        for bc in 0..BLOCKS {
            let mut sum = 0.0;
            let mut count = 0usize;
            for r in edge(br)..edge(br + 1) {
                for c in edge(bc)..edge(bc + 1) {
                    sum += (after.at(r, c) as f64 - before.at(r, c) as f64).abs();
                    count += 1;
                }
            }
            out.push(sum / count as f64);
        }
    }
    out
}
