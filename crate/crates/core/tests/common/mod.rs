// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference implementations used by the integration tests.
//! Written from the definitions with plain loops; they share no code with
//! the library beyond its data types.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vexad_core::dataset::Label;
use vexad_core::linalg::Mat;
use vexad_core::scorer::Scorer;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    let data = (0..rows * cols)
        .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    Mat::from_vec(rows, cols, data).unwrap()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    let mut m = Mat::zeros(rows, cols);
    for i in 0..rows {
        let raw: Vec<f64> = (0..cols).map(|_| 1e-3 + rng.random::<f64>()).collect();
        let t: f64 = raw.iter().sum();
        for (k, v) in raw.into_iter().enumerate() {
            m.set(i, k, v / t);
        }
    }
    m
}

fn d2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..a.len() {
        let t = a[j] - b[j];
        s += t * t;
    }
    s
}

/// One sweep of entropy-regularized soft k-means: responsibilities from the
/// current centers, then centers as responsibility-weighted means.
pub fn soft_kmeans_step(x: &Mat, centers: &Mat, gamma: f64) -> (Mat, Mat) {
    let (n, k, d) = (x.rows(), centers.rows(), x.cols());
    let mut resp = Mat::zeros(n, k);
    for i in 0..n {
        let dists: Vec<f64> = (0..k).map(|c| d2(x.row(i), centers.row(c))).collect();
        let closest = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = dists
            .iter()
            .map(|dd| (-(dd - closest) / gamma).exp())
            .collect();
        let z: f64 = w.iter().sum();
        for c in 0..k {
            resp.set(i, c, w[c] / z);
        }
    }
    let mut next = Mat::zeros(k, d);
    for c in 0..k {
        let mut mass = 0.0;
        let mut acc = vec![0.0; d];
        for i in 0..n {
            let r = resp.get(i, c);
            mass += r;
            for j in 0..d {
                acc[j] += r * x.get(i, j);
            }
        }
        for j in 0..d {
            next.set(c, j, acc[j] / mass.max(1e-12));
        }
    }
    (resp, next)
}

/// EER by brute force: every candidate threshold is scored by a full scan.
pub fn eer_bruteforce(scores: &[f64], labels: &[Label]) -> f64 {
    let p = labels.iter().filter(|l| l.is_change()).count() as u128;
    let n = labels.len() as u128 - p;
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let mut thresholds = vec![f64::NEG_INFINITY];
    for w in sorted.windows(2) {
        thresholds.push(0.5 * w[0] + 0.5 * w[1]);
    }
    thresholds.push(f64::INFINITY);

    let mut best: Option<(u128, u128)> = None;
    for &theta in &thresholds {
        let mut fp = 0u128;
        let mut fneg = 0u128;
        for (s, l) in scores.iter().zip(labels) {
            let flagged = *s >= theta;
            if flagged && !l.is_change() {
                fp += 1;
            }
            if !flagged && l.is_change() {
                fneg += 1;
            }
        }
        let a = fp * p;
        let b = fneg * n;
        let key = (a.max(b) - a.min(b), a + b);
        if best.is_none_or(|k| key < k) {
            best = Some(key);
        }
    }
    100.0 * best.unwrap().1 as f64 / (2 * p * n) as f64
}

/// Farthest-first traversal recomputing every distance from scratch.
pub fn maxmin_bruteforce(points: &Mat, labeled: &[usize], k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = labeled.to_vec();
    let mut picks = Vec::new();
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..points.rows() {
            if chosen.contains(&c) {
                continue;
            }
            let m = chosen
                .iter()
                .map(|&o| d2(points.row(c), points.row(o)))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((c, m));
            }
        }
        let (c, _) = best.unwrap();
        chosen.push(c);
        picks.push(c);
    }
    picks
}

/// Uncertainty ranking by a stable sort on the distance to one half.
pub fn uncertainty_by_sort(scorer: &Scorer, points: &Mat, k: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..points.rows()).collect();
    let key = |i: usize| (scorer.score(points.row(i)).unwrap() - 0.5).abs();
    ids.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap());
    ids.truncate(k);
    ids
}

/// Nearest-sample display by enumerating the remaining candidates per slot.
pub fn display_bruteforce(exemplars: &Mat, pool: &Mat) -> Vec<usize> {
    let mut taken: Vec<usize> = Vec::new();
    for k in 0..exemplars.rows() {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..pool.rows() {
            if taken.contains(&c) {
                continue;
            }
            let dd = d2(pool.row(c), exemplars.row(k));
            if best.is_none_or(|(_, bd)| dd < bd) {
                best = Some((c, dd));
            }
        }
        taken.push(best.unwrap().0);
    }
    taken
}

/// Worst relative error between `score_gradient` and central differences.
pub fn gradient_error(scorer: &Scorer, v: &Mat, h: f64) -> f64 {
    let (g1, g2) = scorer.score_gradient(v).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..v.rows() {
        for j in 0..v.cols() {
            let mut up = v.row(k).to_vec();
            let mut dn = v.row(k).to_vec();
            up[j] += h;
            dn[j] -= h;
            let fd = (scorer.score(&up).unwrap() - scorer.score(&dn).unwrap()) / (2.0 * h);
            for (analytic, numeric) in [(g1.get(k, j), fd), (g2.get(k, j), -fd)] {
                let scale = analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((analytic - numeric).abs() / scale);
            }
        }
    }
    worst
}

pub fn random_scorer(rng: &mut ChaCha8Rng, dim: usize) -> Scorer {
    let mut s = Scorer::zero(dim);
    for w in s.weights.iter_mut() {
        let mag = 0.1 + rng.random::<f64>();
        *w = if rng.random::<bool>() { mag } else { -mag };
    }
    s.bias = rng.random::<f64>() - 0.5;
    s.degenerate = false;
    s
}

pub fn labels_from(bits: &[bool]) -> Vec<Label> {
    bits.iter()
        .map(|&b| if b { Label::Change } else { Label::NoChange })
        .collect()
}
