// SPDX-License-Identifier: MIT OR Apache-2.0

//! Display strategies. `Vexad` is the learned virtual display (see
//! [`crate::display`]); the others are the classic pool-based baselines.
//! Every sampler returns K distinct ids outside the excluded set, with ties
//! broken by smaller id.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sq_euclidean, Mat};
use crate::rng;
use crate::scorer::Scorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Vexad,
    Random,
    Maxmin,
    Uncertainty,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 4] = [
        SamplerKind::Vexad,
        SamplerKind::Random,
        SamplerKind::Maxmin,
        SamplerKind::Uncertainty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Vexad => "vexad",
            SamplerKind::Random => "random",
            SamplerKind::Maxmin => "maxmin",
            SamplerKind::Uncertainty => "uncertainty",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown strategy {s:?}; valid values: vexad, random, maxmin, uncertainty"
                ))
            })
    }
}

fn candidates(pool: &[usize], excluded: &BTreeSet<usize>, k: usize) -> Result<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let out: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|id| !excluded.contains(id) && seen.insert(*id))
        .collect();
    if out.len() < k {
        return Err(Error::InsufficientPool {
            needed: k,
            available: out.len(),
        });
    }
    Ok(out)
}

/// K ids drawn uniformly without replacement from `pool \ forbidden`.
pub fn sample_random(
    pool: &[usize],
    forbidden: &BTreeSet<usize>,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let cands = candidates(pool, forbidden, k)?;
    let mut rng = rng::seeded(seed);
    Ok(index::sample(&mut rng, cands.len(), k)
        .into_iter()
        .map(|i| cands[i])
        .collect())
}

/// Greedy farthest-first traversal: each pick maximizes its minimum
/// distance to the labeled set and to earlier picks. `features` is indexed
/// by sample id.
pub fn sample_maxmin(
    features: &Mat,
    pool: &[usize],
    labeled: &BTreeSet<usize>,
    k: usize,
) -> Result<Vec<usize>> {
    if labeled.is_empty() {
        return Err(Error::Empty(
            "maxmin needs at least one labeled sample".into(),
        ));
    }
    let mut cands = candidates(pool, labeled, k)?;
    let mut min_d: Vec<f64> = cands
        .iter()
        .map(|&c| {
            labeled
                .iter()
                .map(|&l| sq_euclidean(features.row(c), features.row(l)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut picks = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = 0;
        for j in 1..cands.len() {
            if min_d[j] > min_d[best] || (min_d[j] == min_d[best] && cands[j] < cands[best]) {
                best = j;
            }
        }
        let pick = cands.swap_remove(best);
        min_d.swap_remove(best);
        for (c, d) in cands.iter().zip(min_d.iter_mut()) {
            *d = d.min(sq_euclidean(features.row(*c), features.row(pick)));
        }
        picks.push(pick);
    }
    Ok(picks)
}

/// The K candidates whose score is closest to 0.5.
pub fn sample_uncertainty(
    scorer: &Scorer,
    features: &Mat,
    pool: &[usize],
    forbidden: &BTreeSet<usize>,
    k: usize,
) -> Result<Vec<usize>> {
    let cands = candidates(pool, forbidden, k)?;
    let mut ranked = cands
        .into_iter()
        .map(|id| Ok(((scorer.score(features.row(id))? - 0.5).abs(), id)))
        .collect::<Result<Vec<(f64, usize)>>>()?;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, id)| id).collect())
}
