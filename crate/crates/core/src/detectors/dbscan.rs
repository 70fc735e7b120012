//! DBSCAN over the Gower distance.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::{DetectError, Result};
use crate::tabular::{Dataset, GowerSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbscanLabel {
    Cluster(usize),
    Noise,
}

impl DbscanLabel {
    pub fn is_noise(self) -> bool {
        self == DbscanLabel::Noise
    }
}

/// Clusters serialize as their id, noise as `"noise"`.
impl Serialize for DbscanLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DbscanLabel::Cluster(id) => s.serialize_u64(*id as u64),
            DbscanLabel::Noise => s.serialize_str("noise"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbscanResult {
    pub labels: Vec<DbscanLabel>,
    pub eps: f64,
    pub min_pts: usize,
    #[serde(skip)]
    pub core: Vec<bool>,
}

impl DbscanResult {
    pub fn n_clusters(&self) -> usize {
        self.labels
            .iter()
            .filter_map(|l| match l {
                DbscanLabel::Cluster(c) => Some(c + 1),
                DbscanLabel::Noise => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn noise_flags(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_noise()).collect()
    }
}

pub fn dbscan(ds: &Dataset, eps: f64, min_pts: usize) -> Result<DbscanResult> {
    dbscan_in(&GowerSpace::new(ds), eps, min_pts)
}

/// DBSCAN on a prebuilt distance space.
///
/// A row is core when at least `min_pts` rows (itself included) lie within
/// `eps`. Clusters are the connected components of core rows, numbered in
/// the row order of their first core row. A non-core row joins the cluster
/// of the lowest-numbered core row within `eps` of it, otherwise it is
/// noise. The result therefore does not depend on expansion order.
pub fn dbscan_in(space: &GowerSpace, eps: f64, min_pts: usize) -> Result<DbscanResult> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(DetectError::InvalidEps(eps));
    }
    if min_pts < 1 {
        return Err(DetectError::InvalidMinPts);
    }
    let n = space.n_rows();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|p| (0..n).filter(|&q| space.distance(p, q) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![DbscanLabel::Noise; n];
    let mut next_id = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !core[seed] || labels[seed] != DbscanLabel::Noise {
            continue;
        }
        let id = next_id;
        next_id += 1;
        labels[seed] = DbscanLabel::Cluster(id);
        stack.push(seed);
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if core[q] && labels[q] == DbscanLabel::Noise {
                    labels[q] = DbscanLabel::Cluster(id);
                    stack.push(q);
                }
            }
        }
    }
    for p in 0..n {
        if !core[p] {
            if let Some(&q) = neighbors[p].iter().find(|&&q| core[q]) {
                labels[p] = labels[q];
            }
        }
    }
    Ok(DbscanResult {
        labels,
        eps,
        min_pts,
        core,
    })
}
