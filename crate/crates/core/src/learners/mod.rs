//! Supervised learners: information-theoretic attribute scoring, C4.5
//! decision trees, PRISM covering rules and a naive Bayesian classifier.

mod bayes;
mod c45;
mod prism;
mod rules;

pub use bayes::{nb_predict, nb_train, BayesModel, NbPrediction};
pub use c45::{c45_build, C45Params, DecisionTree, Node, SplitKind};
pub use prism::prism_build;
pub use rules::{first_match, tree_to_rules, Condition, Rule};

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::tabular::{AttributeKind, Dataset, TabularError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("target attribute `{0}` must be nominal")]
    TargetNotNominal(String),
    #[error("no attributes besides the target")]
    NoAttributes,
    #[error("attribute `{0}` is numeric; discretize it first")]
    NumericAttribute(String),
    #[error("no training rows with an observed target")]
    EmptyDataset,
    #[error("entropy needs at least one positive count")]
    AllZeroCounts,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = LearnError> = std::result::Result<T, E>;

/// Shannon entropy in bits of a class-count vector.
pub fn entropy(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(LearnError::AllZeroCounts);
    }
    Ok(entropy_of(class_counts, total))
}

pub(crate) fn entropy_of(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    // -0.0 for a pure set
    h + 0.0
}

/// Target classes of a training set, in order of first appearance.
#[derive(Debug, Clone)]
pub(crate) struct Classes {
    pub target: usize,
    pub labels: Vec<String>,
    /// Class id per dataset row; `None` when the target is missing.
    pub of_row: Vec<Option<usize>>,
}

impl Classes {
    pub fn new(ds: &Dataset, target: &str) -> Result<Self> {
        let t = ds.schema().require(target)?;
        if ds.schema().attribute(t).kind != AttributeKind::Nominal {
            return Err(LearnError::TargetNotNominal(target.to_string()));
        }
        let mut labels: Vec<String> = Vec::new();
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let of_row = ds
            .column(t)
            .map(|v| {
                v.as_label().map(|s| {
                    *ids.entry(s).or_insert_with(|| {
                        labels.push(s.to_string());
                        labels.len() - 1
                    })
                })
            })
            .collect();
        Ok(Classes {
            target: t,
            labels,
            of_row,
        })
    }

    /// Rows with an observed target, in row order.
    pub fn training_rows(&self) -> Vec<usize> {
        (0..self.of_row.len())
            .filter(|&i| self.of_row[i].is_some())
            .collect()
    }

    pub fn class(&self, row: usize) -> usize {
        self.of_row[row].expect("training rows have a class")
    }

    pub fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.labels.len()];
        for &r in rows {
            c[self.class(r)] += 1;
        }
        c
    }
}

/// Information-theoretic score of one attribute against the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeScore {
    pub attribute: String,
    /// Information gain in bits, scaled by the fraction of rows where the
    /// attribute is observed.
    pub gain: f64,
    pub split_info: f64,
    pub gain_ratio: f64,
    /// Best binary threshold for numeric attributes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

/// A scored split candidate over a subset of rows.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub gain: f64,
    pub split_info: f64,
    pub gain_ratio: f64,
    pub split: CandidateSplit,
}

#[derive(Debug, Clone)]
pub(crate) enum CandidateSplit {
    /// Labels in order of first appearance, with the rows carrying each.
    Nominal(Vec<(String, Vec<usize>)>),
    Threshold {
        threshold: f64,
        le: Vec<usize>,
        gt: Vec<usize>,
    },
    /// No admissible split (single value, too few rows, all missing).
    None,
}

fn split_information(part_sizes: &[usize], unknown: usize, total: usize) -> f64 {
    let n = total as f64;
    part_sizes
        .iter()
        .chain(std::iter::once(&unknown))
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        + 0.0
}

fn finish(gain: f64, split_info: f64, split: CandidateSplit) -> Candidate {
    let gain = gain.max(0.0);
    let gain_ratio = if split_info > 0.0 {
        gain / split_info
    } else {
        0.0
    };
    Candidate {
        gain,
        split_info,
        gain_ratio,
        split,
    }
}

fn no_split() -> Candidate {
    finish(0.0, 0.0, CandidateSplit::None)
}

/// Scores `attr` on `rows` (all with observed target). Splits must leave at
/// least `min_leaf` known rows in two or more branches.
pub(crate) fn score_attribute(
    ds: &Dataset,
    classes: &Classes,
    rows: &[usize],
    attr: usize,
    min_leaf: usize,
) -> Candidate {
    let total = rows.len();
    let known: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| !ds.cell(r, attr).is_missing())
        .collect();
    if known.is_empty() {
        return no_split();
    }
    let unknown = total - known.len();
    let observed = known.len() as f64 / total as f64;
    let base = entropy_of(&classes.counts(&known), known.len());

    match ds.schema().attribute(attr).kind {
        AttributeKind::Nominal => {
            let mut branches: Vec<(String, Vec<usize>)> = Vec::new();
            let mut index: HashMap<&str, usize> = HashMap::new();
            for &r in &known {
                let label = ds.cell(r, attr).as_label().expect("nominal cell");
                let b = *index.entry(label).or_insert_with(|| {
                    branches.push((label.to_string(), Vec::new()));
                    branches.len() - 1
                });
                branches[b].1.push(r);
            }
            let big_enough = branches.iter().filter(|(_, b)| b.len() >= min_leaf).count();
            if branches.len() < 2 || big_enough < 2 {
                return no_split();
            }
            let k = known.len() as f64;
            let remainder: f64 = branches
                .iter()
                .map(|(_, b)| b.len() as f64 / k * entropy_of(&classes.counts(b), b.len()))
                .sum();
            let sizes: Vec<usize> = branches.iter().map(|(_, b)| b.len()).collect();
            let split_info = split_information(&sizes, unknown, total);
            finish(
                observed * (base - remainder),
                split_info,
                CandidateSplit::Nominal(branches),
            )
        }
        AttributeKind::Numeric => {
            let mut sorted: Vec<(f64, usize)> = known
                .iter()
                .map(|&r| (ds.cell(r, attr).as_number().expect("numeric cell"), r))
                .collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let n_classes = classes.labels.len();
            let mut left = vec![0usize; n_classes];
            let mut right = classes.counts(&known);
            let k = known.len();
            let mut best: Option<(f64, usize, f64)> = None;
            for i in 0..k - 1 {
                let c = classes.class(sorted[i].1);
                left[c] += 1;
                right[c] -= 1;
                let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
                let n_left = i + 1;
                if lo == hi || n_left < min_leaf || k - n_left < min_leaf {
                    continue;
                }
                let remainder = n_left as f64 / k as f64 * entropy_of(&left, n_left)
                    + (k - n_left) as f64 / k as f64 * entropy_of(&right, k - n_left);
                let gain = base - remainder;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    let mut mid = (lo + hi) / 2.0;
                    if mid >= hi {
                        mid = lo;
                    }
                    best = Some((gain, n_left, mid));
                }
            }
            let Some((gain, n_left, threshold)) = best else {
                return no_split();
            };
            let le: Vec<usize> = sorted[..n_left].iter().map(|p| p.1).collect();
            let gt: Vec<usize> = sorted[n_left..].iter().map(|p| p.1).collect();
            let split_info = split_information(&[le.len(), gt.len()], unknown, total);
            finish(
                observed * gain,
                split_info,
                CandidateSplit::Threshold { threshold, le, gt },
            )
        }
    }
}

/// Ranks every non-target attribute by gain ratio against `target`.
///
/// Ties keep schema order. Rows with a missing target are ignored; rows
/// with a missing attribute value are excluded from that attribute's gain,
/// which is then scaled by the observed fraction.
pub fn attribute_scores(ds: &Dataset, target: &str) -> Result<Vec<AttributeScore>> {
    let classes = Classes::new(ds, target)?;
    if ds.n_attributes() < 2 {
        return Err(LearnError::NoAttributes);
    }
    let rows = classes.training_rows();
    if rows.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut scores: Vec<AttributeScore> = (0..ds.n_attributes())
        .filter(|&j| j != classes.target)
        .map(|j| {
            let c = score_attribute(ds, &classes, &rows, j, 1);
            let threshold = match c.split {
                CandidateSplit::Threshold { threshold, .. } => Some(threshold),
                _ => None,
            };
            AttributeScore {
                attribute: ds.schema().attribute(j).name.clone(),
                gain: c.gain,
                split_info: c.split_info,
                gain_ratio: c.gain_ratio,
                threshold,
            }
        })
        .collect();
    scores.sort_by(|a, b| b.gain_ratio.total_cmp(&a.gain_ratio));
    Ok(scores)
}

/// The covering and Bayes learners take nominal inputs only.
pub(crate) fn require_nominal_inputs(ds: &Dataset, target: usize) -> Result<()> {
    for (j, a) in ds.schema().attributes().iter().enumerate() {
        if j != target && a.kind == AttributeKind::Numeric {
            return Err(LearnError::NumericAttribute(a.name.clone()));
        }
    }
    if ds.n_attributes() < 2 {
        return Err(LearnError::NoAttributes);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Attribute, Schema, Value};
    use proptest::prelude::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[4]).unwrap(), 0.0);
        assert_eq!(entropy(&[2, 2]).unwrap(), 1.0);
        assert!((entropy(&[9, 5]).unwrap() - 0.9403).abs() < 1e-4);
        assert_eq!(entropy(&[0, 0]).unwrap_err(), LearnError::AllZeroCounts);
        assert_eq!(entropy(&[3, 0, 3]).unwrap(), 1.0);
    }

    fn two_column(x: &[&str], y: &[&str]) -> Dataset {
        let schema = Schema::new(vec![Attribute::nominal("x"), Attribute::nominal("y")]).unwrap();
        let rows = x
            .iter()
            .zip(y)
            .map(|(a, b)| vec![Value::Label(a.to_string()), Value::Label(b.to_string())])
            .collect();
        Dataset::from_rows(schema, rows).unwrap()
    }

    #[test]
    fn perfect_predictor_has_ratio_one() {
        let ds = two_column(&["a", "a", "b", "b", "b"], &["p", "p", "q", "q", "q"]);
        let s = &attribute_scores(&ds, "y").unwrap()[0];
        let h = entropy(&[2, 3]).unwrap();
        assert!((s.gain - h).abs() < 1e-12);
        assert!((s.gain_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_attribute_has_zero_gain() {
        let ds = two_column(&["a", "a", "b", "b"], &["p", "q", "p", "q"]);
        let s = &attribute_scores(&ds, "y").unwrap()[0];
        assert_eq!(s.gain, 0.0);
        assert_eq!(s.gain_ratio, 0.0);
    }

    #[test]
    fn numeric_target_is_rejected() {
        let schema = Schema::new(vec![Attribute::nominal("x"), Attribute::numeric("y")]).unwrap();
        let ds = Dataset::from_rows(
            schema,
            vec![vec![Value::Label("a".into()), Value::Number(1.0)]],
        )
        .unwrap();
        assert_eq!(
            attribute_scores(&ds, "y").unwrap_err(),
            LearnError::TargetNotNominal("y".into())
        );
    }

    #[test]
    fn missing_values_scale_gain() {
        // x perfectly predicts y where observed; one of four rows is missing
        let schema = Schema::new(vec![Attribute::nominal("x"), Attribute::nominal("y")]).unwrap();
        let l = |s: &str| Value::Label(s.into());
        let ds = Dataset::from_rows(
            schema,
            vec![
                vec![l("a"), l("p")],
                vec![l("b"), l("q")],
                vec![l("b"), l("q")],
                vec![Value::Missing, l("p")],
            ],
        )
        .unwrap();
        let s = &attribute_scores(&ds, "y").unwrap()[0];
        let known_h = entropy(&[1, 2]).unwrap();
        assert!((s.gain - 0.75 * known_h).abs() < 1e-12);
        // split info counts the unknown rows as their own branch
        let si = -(0.25f64 * 0.25f64.log2()) * 2.0 - 0.5 * 0.5f64.log2();
        assert!((s.split_info - si).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn entropy_is_permutation_invariant_and_bounded(
            mut counts in proptest::collection::vec(0usize..50, 1..8)
        ) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let h = entropy(&counts).unwrap();
            let k = counts.iter().filter(|&&c| c > 0).count() as f64;
            prop_assert!(h >= 0.0 && h <= k.log2() + 1e-12);
            counts.reverse();
            prop_assert!((entropy(&counts).unwrap() - h).abs() < 1e-12);
        }

        #[test]
        fn uniform_counts_maximize_entropy(k in 1usize..10, c in 1usize..20) {
            let h = entropy(&vec![c; k]).unwrap();
            prop_assert!((h - (k as f64).log2()).abs() < 1e-12);
        }

        #[test]
        fn ranking_survives_relabeling(
            rows in proptest::collection::vec((0u8..3, 0u8..3, 0u8..2), 4..30)
        ) {
            let build = |names: [&str; 3]| {
                let schema = Schema::new(vec![
                    Attribute::nominal("a"),
                    Attribute::nominal("b"),
                    Attribute::nominal("t"),
                ]).unwrap();
                let data = rows.iter().map(|&(a, b, t)| vec![
                    Value::Label(names[a as usize].to_string()),
                    Value::Label(format!("b{b}")),
                    Value::Label(format!("t{t}")),
                ]).collect();
                Dataset::from_rows(schema, data).unwrap()
            };
            let s1 = attribute_scores(&build(["x", "y", "z"]), "t").unwrap();
            let s2 = attribute_scores(&build(["zz", "aa", "mm"]), "t").unwrap();
            let names1: Vec<_> = s1.iter().map(|s| &s.attribute).collect();
            let names2: Vec<_> = s2.iter().map(|s| &s.attribute).collect();
            prop_assert_eq!(names1, names2);
            for (a, b) in s1.iter().zip(&s2) {
                prop_assert!((a.gain - b.gain).abs() < 1e-12);
            }
        }
    }
}
