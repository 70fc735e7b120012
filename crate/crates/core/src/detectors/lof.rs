//! Local Outlier Factor over the Gower distance.

use rayon::prelude::*;
use serde::Serialize;

use super::{DetectError, Result};
use crate::tabular::{Dataset, GowerSpace};

/// Local reachability density given to a point whose neighbors all sit at
/// distance 0 from it.
pub const LRD_CAP: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LofResult {
    pub k: usize,
    pub scores: Vec<f64>,
    #[serde(skip)]
    pub k_distances: Vec<f64>,
    #[serde(skip)]
    pub lrd: Vec<f64>,
}

struct Neighborhood {
    k_distance: f64,
    /// (row, distance), in row order; includes every tie at the k-distance.
    members: Vec<(usize, f64)>,
}

fn neighborhood(space: &GowerSpace, p: usize, k: usize) -> Neighborhood {
    let mut dist = space.distances_from(p);
    dist[p] = f64::INFINITY;
    let mut scratch = dist.clone();
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    let k_distance = *kth;
    let members = dist
        .iter()
        .enumerate()
        .filter(|&(q, &d)| q != p && d <= k_distance)
        .map(|(q, &d)| (q, d))
        .collect();
    Neighborhood {
        k_distance,
        members,
    }
}

/// LOF score of every row of `ds`, using Gower distances.
pub fn lof_scores(ds: &Dataset, k: usize) -> Result<LofResult> {
    lof_scores_in(&GowerSpace::new(ds), k)
}

/// LOF on a prebuilt distance space.
///
/// Scores are ~1 inside homogeneous regions and grow with relative
/// sparsity. A row whose reachability distances are all 0 (more than `k`
/// exact duplicates) gets an LRD of [`LRD_CAP`] and a score of exactly 1.
pub fn lof_scores_in(space: &GowerSpace, k: usize) -> Result<LofResult> {
    let n = space.n_rows();
    if n < 2 {
        return Err(DetectError::TooFewRows(n));
    }
    if k < 1 || k >= n {
        return Err(DetectError::InvalidK { k, n });
    }
    let hoods: Vec<Neighborhood> = (0..n)
        .into_par_iter()
        .map(|p| neighborhood(space, p, k))
        .collect();
    let k_distances: Vec<f64> = hoods.iter().map(|h| h.k_distance).collect();

    let mut collapsed = vec![false; n];
    let lrd: Vec<f64> = hoods
        .iter()
        .enumerate()
        .map(|(p, h)| {
            let reach: f64 = h.members.iter().map(|&(o, d)| k_distances[o].max(d)).sum();
            let mean = reach / h.members.len() as f64;
            if mean > 0.0 {
                (1.0 / mean).min(LRD_CAP)
            } else {
                collapsed[p] = true;
                LRD_CAP
            }
        })
        .collect();

    let scores = hoods
        .iter()
        .enumerate()
        .map(|(p, h)| {
            if collapsed[p] {
                return 1.0;
            }
            let sum: f64 = h.members.iter().map(|&(o, _)| lrd[o]).sum();
            sum / h.members.len() as f64 / lrd[p]
        })
        .collect();

    Ok(LofResult {
        k,
        scores,
        k_distances,
        lrd,
    })
}

/// Flags rows whose score strictly exceeds `threshold`.
pub fn lof_flag(result: &LofResult, threshold: f64) -> Vec<bool> {
    result.scores.iter().map(|&s| s > threshold).collect()
}
