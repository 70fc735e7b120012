//! The two hybrid procedures.
//!
//! Procedure I ranks attributes against a nominal target, screens each
//! (attribute, target) bin with LOF and profiles the flagged rows.
//! Procedure II votes LOF and DBSCAN over the whole table, lets C4.5, PRISM
//! and naive Bayes confirm or veto the vote, and ranks attributes by the
//! centroid gap of a two-cluster K-Means run over the flagged rows.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detectors::{
    centroid_attribute_distances, dbscan_in, embed, kmeans_restarts, lof_flag, lof_scores,
    lof_scores_in, AttributeRanking, DbscanLabel, DetectError, DEFAULT_DBSCAN_EPS,
    DEFAULT_DBSCAN_MIN_PTS, DEFAULT_LOF_K, DEFAULT_LOF_THRESHOLD,
};
use crate::learners::{
    attribute_scores, c45_build, first_match, nb_predict, nb_train, prism_build, C45Params,
    LearnError,
};
use crate::tabular::{
    column_stats, discretize, znormalize, Attribute, AttributeKind, BinningMethod, Dataset,
    GowerSpace, TabularError, Value,
};

pub const OUTLIER: &str = "outlier";
pub const INLIER: &str = "inlier";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("{requested} bins requested but only {available} input attributes exist")]
    TooManyBins { requested: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("provisional flags cover {flags} rows, dataset has {rows}")]
    FlagLength { flags: usize, rows: usize },
}

pub type Result<T, E = ProcError> = std::result::Result<T, E>;

fn invalid(msg: impl Into<String>) -> ProcError {
    ProcError::InvalidParameter(msg.into())
}

fn check_lof(k: usize, threshold: f64) -> Result<()> {
    if k < 1 {
        return Err(invalid("lof k must be at least 1"));
    }
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(invalid(format!(
            "lof threshold must be positive, got {threshold}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Procedure I

/// An input-output bin: one ranked attribute against the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub input_attribute: String,
    pub target_attribute: String,
    pub data: Dataset,
}

/// The `n_bins` attributes with the highest gain ratio against `target`,
/// each projected together with the target.
pub fn build_bins(ds: &Dataset, target: &str, n_bins: usize) -> Result<Vec<Bin>> {
    let scores = attribute_scores(ds, target)?;
    if n_bins == 0 || n_bins > scores.len() {
        return Err(ProcError::TooManyBins {
            requested: n_bins,
            available: scores.len(),
        });
    }
    scores
        .iter()
        .take(n_bins)
        .map(|s| {
            Ok(Bin {
                input_attribute: s.attribute.clone(),
                target_attribute: target.to_string(),
                data: ds.project(&[s.attribute.as_str(), target])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcOneConfig {
    pub n_bins: usize,
    pub lof_k: usize,
    pub lof_threshold: f64,
}

impl Default for ProcOneConfig {
    fn default() -> Self {
        Self {
            n_bins: 6,
            lof_k: DEFAULT_LOF_K,
            lof_threshold: DEFAULT_LOF_THRESHOLD,
        }
    }
}

impl ProcOneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 {
            return Err(invalid("n_bins must be at least 1"));
        }
        check_lof(self.lof_k, self.lof_threshold)
    }
}

/// Mean (numeric input) or mode (nominal input) over the flagged rows,
/// with the mode of the target over the same rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuspiciousProfile {
    pub input: Value,
    pub target: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinReport {
    pub input_attribute: String,
    pub target_attribute: String,
    /// Rows screened, after dropping rows missing either value.
    pub rows: usize,
    pub outlier_count: usize,
    pub outlier_row_ids: Vec<usize>,
    pub suspicious_profile: Option<SuspiciousProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcedureOneOutput {
    pub bins: Vec<BinReport>,
    pub warnings: Vec<String>,
}

/// LOF flags of one bin, as `(row positions in the complete-case
/// projection, that projection)`.
fn screen_bin(bin: &Bin, k: usize, threshold: f64) -> Result<Option<(Vec<usize>, Dataset)>> {
    let complete = bin
        .data
        .filter_rows(|row| row.iter().all(|v| !v.is_missing()));
    if complete.n_rows() < k + 1 {
        return Ok(None);
    }
    let scaled = if complete.schema().attribute(0).kind == AttributeKind::Numeric {
        znormalize(&complete, &[bin.input_attribute.as_str()])?
    } else {
        complete.clone()
    };
    let lof = lof_scores(&scaled, k)?;
    let flagged = lof_flag(&lof, threshold)
        .into_iter()
        .enumerate()
        .filter_map(|(i, f)| f.then_some(i))
        .collect();
    Ok(Some((flagged, complete)))
}

fn profile(complete: &Dataset, flagged: &[usize]) -> Result<Option<SuspiciousProfile>> {
    if flagged.is_empty() {
        return Ok(None);
    }
    let subset = complete.select_rows(flagged);
    let input_name = &subset.schema().attribute(0).name;
    let input_stats = column_stats(&subset, input_name)?;
    let input = match input_stats.kind {
        AttributeKind::Numeric => input_stats.mean.map_or(Value::Missing, Value::Number),
        AttributeKind::Nominal => input_stats.mode.unwrap_or(Value::Missing),
    };
    let target_stats = column_stats(&subset, &subset.schema().attribute(1).name)?;
    Ok(Some(SuspiciousProfile {
        input,
        target: target_stats.mode.unwrap_or(Value::Missing),
    }))
}

/// Procedure I: per-bin LOF screening, reports in bin-rank order.
///
/// A bin with fewer than `lof_k + 1` complete rows is skipped and a warning
/// recorded.
pub fn procedure_one(
    ds: &Dataset,
    target: &str,
    cfg: &ProcOneConfig,
) -> Result<ProcedureOneOutput> {
    cfg.validate()?;
    let bins = build_bins(ds, target, cfg.n_bins)?;
    let screened: Vec<Result<Option<BinReport>>> = bins
        .par_iter()
        .map(|bin| {
            let Some((flagged, complete)) = screen_bin(bin, cfg.lof_k, cfg.lof_threshold)? else {
                return Ok(None);
            };
            Ok(Some(BinReport {
                input_attribute: bin.input_attribute.clone(),
                target_attribute: bin.target_attribute.clone(),
                rows: complete.n_rows(),
                outlier_count: flagged.len(),
                outlier_row_ids: flagged.iter().map(|&i| complete.row_id(i)).collect(),
                suspicious_profile: profile(&complete, &flagged)?,
            }))
        })
        .collect();

    let mut out = ProcedureOneOutput {
        bins: Vec::new(),
        warnings: Vec::new(),
    };
    for (bin, result) in bins.iter().zip(screened) {
        match result? {
            Some(report) => out.bins.push(report),
            None => out.warnings.push(format!(
                "bin {}({}) skipped: fewer than {} complete rows",
                bin.input_attribute,
                bin.target_attribute,
                cfg.lof_k + 1
            )),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Procedure II

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase1Rule {
    #[default]
    Union,
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoteConfig {
    pub phase1_rule: Phase1Rule,
    /// Classifiers (of C4.5, PRISM, naive Bayes) that must confirm a flag.
    pub classifier_quorum: usize,
    /// Equal-frequency bins used to discretize numeric attributes for
    /// PRISM and naive Bayes.
    pub discretize_bins: usize,
}

impl Default for VoteConfig {
    fn default() -> Self {
        Self {
            phase1_rule: Phase1Rule::Union,
            classifier_quorum: 2,
            discretize_bins: 5,
        }
    }
}

impl VoteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.classifier_quorum) {
            return Err(invalid(format!(
                "classifier_quorum must be in [1, 3], got {}",
                self.classifier_quorum
            )));
        }
        if self.discretize_bins < 2 {
            return Err(invalid("discretize_bins must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    pub lof_k: usize,
    pub lof_threshold: f64,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            lof_k: DEFAULT_LOF_K,
            lof_threshold: DEFAULT_LOF_THRESHOLD,
            dbscan_eps: DEFAULT_DBSCAN_EPS,
            dbscan_min_pts: DEFAULT_DBSCAN_MIN_PTS,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        check_lof(self.lof_k, self.lof_threshold)?;
        if !(self.dbscan_eps > 0.0 && self.dbscan_eps <= 1.0) {
            return Err(invalid(format!(
                "dbscan eps must be in (0, 1], got {}",
                self.dbscan_eps
            )));
        }
        if self.dbscan_min_pts < 1 {
            return Err(invalid("dbscan min_pts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcTwoConfig {
    pub detectors: DetectorParams,
    pub vote: VoteConfig,
    pub kmeans_seed: u64,
    pub kmeans_max_iter: usize,
    pub kmeans_restarts: usize,
}

impl Default for ProcTwoConfig {
    fn default() -> Self {
        Self {
            detectors: DetectorParams::default(),
            vote: VoteConfig::default(),
            kmeans_seed: 0,
            kmeans_max_iter: 100,
            kmeans_restarts: 10,
        }
    }
}

impl ProcTwoConfig {
    pub fn validate(&self) -> Result<()> {
        self.detectors.validate()?;
        self.vote.validate()?;
        if self.kmeans_max_iter == 0 {
            return Err(invalid("kmeans_max_iter must be at least 1"));
        }
        if self.kmeans_restarts == 0 {
            return Err(invalid("kmeans_restarts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1 {
    pub lof_scores: Vec<f64>,
    pub lof_flags: Vec<bool>,
    pub dbscan_labels: Vec<DbscanLabel>,
    pub dbscan_noise: Vec<bool>,
    pub provisional: Vec<bool>,
}

/// LOF flags and DBSCAN noise on the whole dataset, combined by `rule`.
pub fn phase1_detect(ds: &Dataset, rule: Phase1Rule, params: &DetectorParams) -> Result<Phase1> {
    params.validate()?;
    let space = GowerSpace::new(ds);
    let lof = lof_scores_in(&space, params.lof_k)?;
    let db = dbscan_in(&space, params.dbscan_eps, params.dbscan_min_pts)?;
    let lof_flags = lof_flag(&lof, params.lof_threshold);
    let dbscan_noise = db.noise_flags();
    let provisional = lof_flags
        .iter()
        .zip(&dbscan_noise)
        .map(|(&a, &b)| match rule {
            Phase1Rule::Union => a || b,
            Phase1Rule::Intersection => a && b,
        })
        .collect();
    Ok(Phase1 {
        lof_scores: lof.scores,
        lof_flags,
        dbscan_labels: db.labels,
        dbscan_noise,
        provisional,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub flags: Vec<bool>,
    /// Per classifier, whether it predicts "outlier" for each row. Empty
    /// when refinement was skipped.
    pub predictions: BTreeMap<&'static str, Vec<bool>>,
    pub skipped: bool,
}

fn unique_name(ds: &Dataset, base: &str) -> String {
    let mut name = base.to_string();
    while ds.schema().index_of(&name).is_some() {
        name.push('_');
    }
    name
}

/// Every numeric attribute replaced by equal-frequency
/// interval labels; an all-missing numeric column becomes an all-missing
/// nominal one.
fn discretized_copy(ds: &Dataset, n_bins: usize) -> Result<Dataset> {
    let mut out = ds.clone();
    for attr in ds.schema().attributes() {
        if attr.kind != AttributeKind::Numeric {
            continue;
        }
        out = match discretize(&out, &attr.name, n_bins, BinningMethod::EqualFrequency) {
            Ok(d) => d,
            Err(TabularError::AllMissing(_)) => out.with_column(
                Attribute::nominal(attr.name.clone()),
                vec![Value::Missing; ds.n_rows()],
            )?,
            Err(e) => return Err(e.into()),
        };
    }
    Ok(out)
}

/// Lets C4.5 (raw attributes), PRISM and naive Bayes (both on a
/// discretized copy) relearn the provisional labels. A row stays flagged
/// only if it was provisionally flagged and at least `quorum` classifiers
/// predict "outlier" for it. One-class provisional labels skip the step.
pub fn classifier_refine(
    ds: &Dataset,
    provisional: &[bool],
    vote: &VoteConfig,
) -> Result<Refinement> {
    vote.validate()?;
    if provisional.len() != ds.n_rows() {
        return Err(ProcError::FlagLength {
            flags: provisional.len(),
            rows: ds.n_rows(),
        });
    }
    let n_flagged = provisional.iter().filter(|&&f| f).count();
    if n_flagged == 0 || n_flagged == provisional.len() || ds.n_attributes() == 0 {
        return Ok(Refinement {
            flags: provisional.to_vec(),
            predictions: BTreeMap::new(),
            skipped: true,
        });
    }

    let target = unique_name(ds, "provisional_label");
    let labels = provisional
        .iter()
        .map(|&f| Value::Label(if f { OUTLIER } else { INLIER }.to_string()))
        .collect();
    let labelled = ds.with_column(Attribute::nominal(target.clone()), labels)?;
    let discrete = discretized_copy(&labelled, vote.discretize_bins)?;

    let tree = c45_build(&labelled, &target, C45Params::default())?;
    let rules = prism_build(&discrete, &target)?;
    let bayes = nb_train(&discrete, &target)?;

    let c45: Vec<bool> = labelled
        .rows()
        .par_iter()
        .map(|row| tree.predict(row) == OUTLIER)
        .collect();
    let prism: Vec<bool> = discrete
        .rows()
        .par_iter()
        .map(|row| first_match(&rules, row).is_some_and(|r| r.consequent == OUTLIER))
        .collect();
    let nb: Vec<bool> = discrete
        .rows()
        .par_iter()
        .map(|row| nb_predict(&bayes, row).label == OUTLIER)
        .collect();

    let flags = (0..ds.n_rows())
        .map(|i| {
            let votes = usize::from(c45[i]) + usize::from(prism[i]) + usize::from(nb[i]);
            provisional[i] && votes >= vote.classifier_quorum
        })
        .collect();
    let predictions = BTreeMap::from([("c45", c45), ("naive_bayes", nb), ("prism", prism)]);
    Ok(Refinement {
        flags,
        predictions,
        skipped: false,
    })
}

/// Evidence one detector contributed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorEvidence {
    /// Rows this detector flagged (LOF, DBSCAN noise) or predicted as
    /// outliers (classifiers).
    pub flagged_row_ids: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<DbscanLabel>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierReport {
    pub n_rows: usize,
    pub flagged_row_ids: Vec<usize>,
    pub flagged_count: usize,
    /// `flagged_count / n_rows`.
    pub flagged_fraction: f64,
    pub provisional_count: usize,
    pub refinement_skipped: bool,
    pub per_detector: BTreeMap<String, DetectorEvidence>,
    pub provenance: ProcTwoConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcedureTwoOutput {
    pub report: OutlierReport,
    pub ranking: AttributeRanking,
    /// Sizes of the two K-Means clusters of the flagged rows.
    pub cluster_sizes: Vec<usize>,
    pub notes: Vec<String>,
}

fn ids_where(ds: &Dataset, flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter(|&(_, &f)| f)
        .map(|(i, _)| ds.row_id(i))
        .collect()
}

/// Procedure II: detector vote, classifier refinement, then attribute
/// ranking by the centroid gap of a two-cluster K-Means over the flagged
/// rows.
pub fn procedure_two(ds: &Dataset, cfg: &ProcTwoConfig) -> Result<ProcedureTwoOutput> {
    cfg.validate()?;
    let mut notes = Vec::new();
    let phase1 = phase1_detect(ds, cfg.vote.phase1_rule, &cfg.detectors)?;
    let provisional_count = phase1.provisional.iter().filter(|&&f| f).count();
    let refined = if provisional_count == 0 {
        notes.push("no detector fired; no outliers".to_string());
        Refinement {
            flags: phase1.provisional.clone(),
            predictions: BTreeMap::new(),
            skipped: true,
        }
    } else {
        let r = classifier_refine(ds, &phase1.provisional, &cfg.vote)?;
        if r.skipped {
            notes.push("provisional labels are one-class; refinement skipped".to_string());
        }
        r
    };

    let mut per_detector = BTreeMap::new();
    per_detector.insert(
        "lof".to_string(),
        DetectorEvidence {
            flagged_row_ids: ids_where(ds, &phase1.lof_flags),
            scores: Some(phase1.lof_scores.clone()),
            labels: None,
        },
    );
    per_detector.insert(
        "dbscan".to_string(),
        DetectorEvidence {
            flagged_row_ids: ids_where(ds, &phase1.dbscan_noise),
            scores: None,
            labels: Some(phase1.dbscan_labels.clone()),
        },
    );
    for (name, predicted) in &refined.predictions {
        per_detector.insert(
            name.to_string(),
            DetectorEvidence {
                flagged_row_ids: ids_where(ds, predicted),
                scores: None,
                labels: None,
            },
        );
    }

    let flagged_positions: Vec<usize> = refined
        .flags
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect();
    let flagged_count = flagged_positions.len();
    let report = OutlierReport {
        n_rows: ds.n_rows(),
        flagged_row_ids: flagged_positions.iter().map(|&i| ds.row_id(i)).collect(),
        flagged_count,
        flagged_fraction: if ds.n_rows() == 0 {
            0.0
        } else {
            flagged_count as f64 / ds.n_rows() as f64
        },
        provisional_count,
        refinement_skipped: refined.skipped,
        per_detector,
        provenance: *cfg,
    };

    let (ranking, cluster_sizes) = if flagged_count < 2 {
        notes.push(format!(
            "{flagged_count} flagged rows; attribute ranking needs at least 2"
        ));
        (AttributeRanking::default(), Vec::new())
    } else {
        let outliers = ds.select_rows(&flagged_positions);
        let clustering = kmeans_restarts(
            &embed(&outliers),
            2,
            cfg.kmeans_seed,
            cfg.kmeans_max_iter,
            cfg.kmeans_restarts,
        )?;
        let mut sizes = vec![0; 2];
        for &c in &clustering.assignment {
            sizes[c] += 1;
        }
        (centroid_attribute_distances(&clustering, &outliers)?, sizes)
    };

    Ok(ProcedureTwoOutput {
        report,
        ranking,
        cluster_sizes,
        notes,
    })
}
