//! Unsupervised detectors: LOF, DBSCAN and K-Means, plus the per-attribute
//! centroid-distance ranking computed from a two-cluster K-Means run.
//!
//! LOF and DBSCAN work in Gower space ([`crate::tabular::GowerSpace`]);
//! K-Means works on a z-score + one-hot embedding because it needs a space
//! closed under averaging.

mod dbscan;
mod kmeans;
mod lof;

pub use dbscan::{dbscan, dbscan_in, DbscanLabel, DbscanResult};
pub use kmeans::{
    centroid_attribute_distances, embed, kmeans, kmeans_embedded, kmeans_restarts,
    AttributeRanking, Clustering, EmbeddedAttribute, Embedding, RankedAttribute,
};
pub use lof::{lof_flag, lof_scores, lof_scores_in, LofResult, LRD_CAP};

use thiserror::Error;

use crate::tabular::TabularError;

pub const DEFAULT_LOF_K: usize = 10;
pub const DEFAULT_LOF_THRESHOLD: f64 = 1.5;
pub const DEFAULT_DBSCAN_EPS: f64 = 0.15;
pub const DEFAULT_DBSCAN_MIN_PTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("k = {k} is out of range for {n} rows")]
    InvalidK { k: usize, n: usize },
    #[error("eps must be positive, got {0}")]
    InvalidEps(f64),
    #[error("min_pts must be at least 1")]
    InvalidMinPts,
    #[error("attribute ranking needs exactly 2 clusters, got {0}")]
    NotTwoClusters(usize),
    #[error("clustering was computed on a different schema")]
    LayoutMismatch,
}

pub type Result<T, E = DetectError> = std::result::Result<T, E>;
