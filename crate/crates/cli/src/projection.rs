// SPDX-License-Identifier: MIT OR Apache-2.0

//! 2-D principal-component projection, used as a glyph position for
//! samples that carry no pixel grids.

use vexad_core::linalg::{dot, Mat};

fn top_component(cov: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|j| 1.0 + j as f64 / d as f64).collect();
    for _ in 0..500 {
        let mut next: Vec<f64> = cov.iter().map(|row| dot(row, &v)).collect();
        let norm = dot(&next, &next).sqrt();
        if norm < 1e-300 {
            return vec![0.0; d];
        }
        next.iter_mut().for_each(|x| *x /= norm);
        let change: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if change < 1e-12 {
            break;
        }
    }
    v
}

/// Per-row coordinates on the first two principal axes (power iteration
/// with deflation). Deterministic for a given matrix.
pub fn pca2(x: &Mat) -> Vec<[f64; 2]> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 || d == 0 {
        return vec![[0.0, 0.0]; n];
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v / n as f64;
        }
    }
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| x.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in &centered {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += r[a] * r[b] / n as f64;
            }
        }
    }
    let first = top_component(&cov, d);
    let lambda: f64 = cov
        .iter()
        .map(|row| dot(row, &first))
        .zip(&first)
        .map(|(a, b)| a * b)
        .sum();
    for a in 0..d {
        for b in 0..d {
            cov[a][b] -= lambda * first[a] * first[b];
        }
    }
    let second = if d > 1 {
        top_component(&cov, d)
    } else {
        vec![0.0; d]
    };
    centered
        .iter()
        .map(|r| [dot(r, &first), dot(r, &second)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_data_keeps_its_distances() {
        // Points on a tilted plane in 3-D: two components capture everything.
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|i| {
                let (a, b) = ((i % 5) as f64 * 2.0, (i / 5) as f64 * 0.7);
                vec![a + b, a - b, 0.5 * a]
            })
            .collect();
        let x = Mat::from_rows(&rows).unwrap();
        let p = pca2(&x);
        for i in 0..25 {
            for j in 0..25 {
                let orig: f64 = (0..3).map(|c| (x.get(i, c) - x.get(j, c)).powi(2)).sum();
                let proj = (p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2);
                assert!((orig - proj).abs() < 1e-8 * (1.0 + orig));
            }
        }
    }
}
